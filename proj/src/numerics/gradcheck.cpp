// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ticon/errors.hpp"

namespace ticon::num {

namespace {

double eval_scalar(const ScalarFn& f, const Tensor& x) {
  Tape tape(false);
  Var in = tape.constant(x);
  const double v = f(tape, in).value().item();
  if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite function value");
  return v;
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw RangeError("grad_check: eps must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var in = tape.leaf(x);
    Var out = f(tape, in);
    if (!std::isfinite(out.value().item())) throw NumericalError("grad_check: non-finite value");
    tape.backward(out);
    analytic = tape.has_grad(in.id()) ? in.grad() : Tensor(x.shape(), 0.0);
  }
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = eval_scalar(f, probe);
    probe[i] = orig - eps;
    const double fm = eval_scalar(f, probe);
    probe[i] = orig;
    worst = std::max(worst, rel_err(analytic[i], (fp - fm) / (2.0 * eps)));
  }
  return worst;
}

double grad_check_params(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                         double eps, std::size_t entries_per_tensor) {
  if (!(eps > 0.0)) throw RangeError("grad_check: eps must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = f(tape);
    if (!std::isfinite(out.value().item())) throw NumericalError("grad_check: non-finite value");
    tape.backward(out);
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : params) {
    analytic.push_back(p->grad);
    p->zero_grad();
  }
  auto eval = [&] {
    Tape tape(false);
    const double v = f(tape).value().item();
    if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite function value");
    return v;
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    const std::size_t n = p.value.size();
    const std::size_t probes = entries_per_tensor == 0 ? n : std::min(n, entries_per_tensor);
    for (std::size_t j = 0; j < probes; ++j) {
      const std::size_t i = (j * n) / probes;
      const double orig = p.value[i];
      p.value[i] = orig + eps;
      const double fp = eval();
      p.value[i] = orig - eps;
      const double fm = eval();
      p.value[i] = orig;
      worst = std::max(worst, rel_err(analytic[k][i], (fp - fm) / (2.0 * eps)));
    }
  }
  return worst;
}

}  // namespace ticon::num
