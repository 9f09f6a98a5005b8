// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/numerics/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ticon/errors.hpp"

namespace ticon::num {

void adamw_step(std::span<Parameter* const> params, OptState& state, double lr,
                const AdamWHyper& hyper) {
  if (lr < 0.0) throw RangeError("adamw_step: negative learning rate");
  if (state.first_moment.empty() && state.step_count == 0) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape(), 0.0);
      state.second_moment.emplace_back(p->value.shape(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adamw_step: optimizer state holds " +
                     std::to_string(state.first_moment.size()) + " tensors, got " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (!p.grad.same_shape(p.value) || !state.first_moment[k].same_shape(p.value)) {
      throw ShapeError("adamw_step: shape mismatch for parameter '" + p.name + "'");
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    const double decay = p.decay ? lr * hyper.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      double x = p.value[i];
      if (decay != 0.0) x *= (1.0 - decay);
      x -= lr * (mhat / (std::sqrt(vhat) + hyper.eps));
      p.value[i] = x;
    }
    require_finite(p.value, "adamw_step");
  }
}

void Schedule::validate() const {
  if (warmup_iters <= 0 || warmup_iters > total_iters) {
    throw ConfigError("schedule requires 0 < warmup_iters <= total_iters");
  }
  if (floor_fraction < 0.0 || floor_fraction >= 1.0) {
    throw ConfigError("schedule floor_fraction must lie in [0, 1)");
  }
}

double lr_at(std::int64_t iter, const Schedule& sched) {
  if (iter < 0 || iter > sched.total_iters) {
    throw RangeError("lr_at: iteration " + std::to_string(iter) + " outside [0, " +
                     std::to_string(sched.total_iters) + "]");
  }
  if (iter <= sched.warmup_iters) {
    return sched.base_lr * static_cast<double>(iter) / static_cast<double>(sched.warmup_iters);
  }
  const double floor = sched.floor_fraction * sched.base_lr;
  const double progress = static_cast<double>(iter - sched.warmup_iters) /
                          static_cast<double>(sched.total_iters - sched.warmup_iters);
  return floor + (sched.base_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace ticon::num
