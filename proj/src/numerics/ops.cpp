// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/numerics/ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ticon/errors.hpp"

namespace ticon::num::ops {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.value().shape()) +
                     " vs " + shape_string(b.value().shape()));
  }
}

void require_rank2(const Var& a, const char* op) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 operand, got " +
                     shape_string(a.value().shape()));
  }
}

void axpy(Tensor& dst, const Tensor& src, double alpha = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

// Elementwise unary op given f(x) and f'(x, y) with y = f(x).
template <class F, class D>
Var elementwise(Var x, F f, D df) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix, df](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

// [n,m] -> [n,1] row sums.
Var row_sum(Var x) {
  const Tensor& xv = x.value();
  Tensor y = Tensor::matrix(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (double v : xv.row_span(r)) s += v;
    y(r, 0) = s;
  }
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    const std::size_t m = gx.cols();
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < m; ++c) gx(r, c) += g(r, 0);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  Tensor y = gemm(a.value(), b.value());
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) gemm_accumulate(g, t.value(ib), t.grad(ia), false, true);
    if (t.requires_grad(ib)) gemm_accumulate(t.value(ia), g, t.grad(ib), true, false);
  });
}

Var matmul_nt(Var a, Var b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  Tensor y = gemm(a.value(), b.value(), false, true);
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    // y = a b^T: da = g b, db = g^T a.
    if (t.requires_grad(ia)) gemm_accumulate(g, t.value(ib), t.grad(ia), false, false);
    if (t.requires_grad(ib)) gemm_accumulate(g, t.value(ia), t.grad(ib), true, false);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  axpy(y, b.value());
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) axpy(t.grad(ia), g);
    if (t.requires_grad(ib)) axpy(t.grad(ib), g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor y = a.value();
  axpy(y, b.value(), -1.0);
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) axpy(t.grad(ia), g);
    if (t.requires_grad(ib)) axpy(t.grad(ib), g, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      const Tensor& bv = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      const Tensor& av = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  for (double& v : y.data()) v *= s;
  const std::uint32_t ia = a.id();
  return a.tape().record(std::move(y), {a}, [ia, s](Tape& t, std::uint32_t self) {
    if (t.requires_grad(ia)) axpy(t.grad(ia), t.grad(self), s);
  });
}

Var mul_const(Var a, const Tensor& c) {
  if (!a.value().same_shape(c)) throw ShapeError("mul_const: shape mismatch");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= c[i];
  const std::uint32_t ia = a.id();
  return a.tape().record(std::move(y), {a}, [ia, c](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c[i];
  });
}

Var add_row(Var x, Var bias) {
  require_rank2(x, "add_row");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.size() != xv.cols()) {
    throw ShapeError("add_row: bias " + shape_string(bv.shape()) + " vs input " +
                     shape_string(xv.shape()));
  }
  Tensor y = xv;
  const std::size_t m = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < m; ++c) y(r, c) += bv[c];
  const std::uint32_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(y), {x, bias}, [ix, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) axpy(t.grad(ix), g);
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      const std::size_t m = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < m; ++c) gb[c] += g(r, c);
    }
  });
}

Var linear(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require_rank2(x, "layer_norm");
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  if (gamma.value().size() != m || beta.value().size() != m) {
    throw ShapeError("layer_norm: scale/shift width mismatch");
  }
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(n);
  Tensor y(xv.shape());
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < m; ++c) mu += xv(r, c);
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double d = xv(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<double>(m);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < m; ++c) {
      xhat(r, c) = (xv(r, c) - mu) * is;
      y(r, c) = gv[c] * xhat(r, c) + bv[c];
    }
  }
  const std::uint32_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(
      std::move(y), {x, gamma, beta},
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                          std::uint32_t self) {
        const Tensor& g = t.grad(self);
        const std::size_t n = g.rows(), m = g.cols();
        if (t.requires_grad(ig)) {
          Tensor& gg = t.grad(ig);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < m; ++c) gg[c] += g(r, c) * xhat(r, c);
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad(ib);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < m; ++c) gb[c] += g(r, c);
        }
        if (t.requires_grad(ix)) {
          const Tensor& gv = t.value(ig);
          Tensor& gx = t.grad(ix);
          const double inv_m = 1.0 / static_cast<double>(m);
          for (std::size_t r = 0; r < n; ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
              const double d = g(r, c) * gv[c];
              mean_d += d;
              mean_dx += d * xhat(r, c);
            }
            mean_d *= inv_m;
            mean_dx *= inv_m;
            for (std::size_t c = 0; c < m; ++c) {
              const double d = g(r, c) * gv[c];
              gx(r, c) += inv_std[r] * (d - mean_d - xhat(r, c) * mean_dx);
            }
          }
        }
      });
}

Var softmax_rows(Var x, const Tensor* bias) {
  require_rank2(x, "softmax_rows");
  const Tensor& xv = x.value();
  if (bias && !bias->same_shape(xv)) {
    throw ShapeError("softmax_rows: bias " + shape_string(bias->shape()) + " vs logits " +
                     shape_string(xv.shape()));
  }
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor y(xv.shape());
  std::vector<double> z(m);
  for (std::size_t r = 0; r < n; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) {
      z[c] = xv(r, c) + (bias ? (*bias)(r, c) : 0.0);
      if (z[c] > mx) mx = z[c];
    }
    if (!std::isfinite(mx)) throw NumericalError("softmax_rows: row without finite logits");
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      z[c] = std::exp(z[c] - mx);
      s += z[c];
    }
    for (std::size_t c = 0; c < m; ++c) y(r, c) = z[c] / s;
  }
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad(ix);
    const std::size_t m = g.cols();
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < m; ++c) dot += g(r, c) * yv(r, c);
      for (std::size_t c = 0; c < m; ++c) gx(r, c) += yv(r, c) * (g(r, c) - dot);
    }
  });
}

Var log_softmax_rows(Var x) {
  require_rank2(x, "log_softmax_rows");
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor y(xv.shape());
  for (std::size_t r = 0; r < n; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) mx = std::max(mx, xv(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += std::exp(xv(r, c) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < m; ++c) y(r, c) = xv(r, c) - lse;
  }
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad(ix);
    const std::size_t m = g.cols();
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < m; ++c) gs += g(r, c);
      for (std::size_t c = 0; c < m; ++c) gx(r, c) += g(r, c) - std::exp(yv(r, c)) * gs;
    }
  });
}

Var gelu(Var x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return elementwise(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [inv_sqrt_2pi](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        return cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Var tanh(Var x) {
  return elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return elementwise(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var l2_normalize_rows(Var x) {
  require_rank2(x, "l2_normalize_rows");
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor y(xv.shape());
  std::vector<double> inv_norm(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (double v : xv.row_span(r)) s += v * v;
    if (!(s > 0.0)) throw NumericalError("l2_normalize_rows: zero-norm row " + std::to_string(r));
    inv_norm[r] = 1.0 / std::sqrt(s);
    for (std::size_t c = 0; c < m; ++c) y(r, c) = xv(r, c) * inv_norm[r];
  }
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x},
                         [ix, inv_norm = std::move(inv_norm)](Tape& t, std::uint32_t self) {
                           if (!t.requires_grad(ix)) return;
                           const Tensor& g = t.grad(self);
                           const Tensor& yv = t.value(self);
                           Tensor& gx = t.grad(ix);
                           const std::size_t m = g.cols();
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                             double dot = 0.0;
                             for (std::size_t c = 0; c < m; ++c) dot += g(r, c) * yv(r, c);
                             for (std::size_t c = 0; c < m; ++c)
                               gx(r, c) += inv_norm[r] * (g(r, c) - yv(r, c) * dot);
                           }
                         });
}

Var cosine_rows(Var a, Var b) {
  require_same_shape(a, b, "cosine_rows");
  return row_sum(mul(l2_normalize_rows(a), l2_normalize_rows(b)));
}

Var mean_rows(Var x, std::span<const std::size_t> indices) {
  require_rank2(x, "mean_rows");
  const Tensor& xv = x.value();
  if (indices.empty()) throw EmptyInputError("mean_rows: empty index set");
  const std::size_t m = xv.cols();
  Tensor y = Tensor::matrix(1, m);
  for (std::size_t idx : indices) {
    if (idx >= xv.rows()) throw ShapeError("mean_rows: index out of range");
    for (std::size_t c = 0; c < m; ++c) y[c] += xv(idx, c);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& v : y.data()) v *= inv;
  const std::uint32_t ix = x.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return x.tape().record(std::move(y), {x},
                         [ix, idx = std::move(idx), inv](Tape& t, std::uint32_t self) {
                           if (!t.requires_grad(ix)) return;
                           const Tensor& g = t.grad(self);
                           Tensor& gx = t.grad(ix);
                           const std::size_t m = g.cols();
                           for (std::size_t r : idx)
                             for (std::size_t c = 0; c < m; ++c) gx(r, c) += g[c] * inv;
                         });
}

Var mean_rows(Var x) {
  std::vector<std::size_t> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return mean_rows(x, all);
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::uint32_t ix = x.id();
  return x.tape().record(Tensor::scalar(s), {x}, [ix](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const double g = t.grad(self)[0];
    for (double& v : t.grad(ix).data()) v += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw EmptyInputError("concat_cols: no operands");
  const std::size_t n = parts.front().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != n) throw ShapeError("concat_cols: row count mismatch");
    total += p.cols();
  }
  Tensor y = Tensor::matrix(n, total);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) y(r, off + c) = pv(r, c);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += pv.cols();
  }
  return parts.front().tape().record(
      std::move(y), parts,
      [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor& gp = t.grad(ids[k]);
          for (std::size_t r = 0; r < gp.rows(); ++r)
            for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, offsets[k] + c);
        }
      });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw EmptyInputError("concat_rows: no operands");
  const std::size_t m = parts.front().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != m) throw ShapeError("concat_rows: column count mismatch");
    total += p.rows();
  }
  std::vector<double> data;
  data.reserve(total * m);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.rows();
  }
  return parts.front().tape().record(
      Tensor({total, m}, std::move(data)), parts,
      [ids = std::move(ids), offsets = std::move(offsets), m](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor& gp = t.grad(ids[k]);
          const double* src = g.data().data() + offsets[k] * m;
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += src[i];
        }
      });
}

Var gather_rows(Var x, std::span<const std::size_t> indices) {
  require_rank2(x, "gather_rows");
  const Tensor& xv = x.value();
  const std::size_t m = xv.cols();
  Tensor y = Tensor::matrix(indices.size(), m);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= xv.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t c = 0; c < m; ++c) y(i, c) = xv(indices[i], c);
  }
  const std::uint32_t ix = x.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return x.tape().record(std::move(y), {x}, [ix, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    const std::size_t m = g.cols();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < m; ++c) gx(idx[i], c) += g(i, c);
  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  require_rank2(x, "slice_cols");
  const Tensor& xv = x.value();
  if (start + count > xv.cols()) throw ShapeError("slice_cols: range out of bounds");
  const std::size_t n = xv.rows();
  Tensor y = Tensor::matrix(n, count);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < count; ++c) y(r, c) = xv(r, start + c);
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix, start](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gx(r, start + c) += g(r, c);
  });
}

Var transpose(Var x) {
  require_rank2(x, "transpose");
  const std::uint32_t ix = x.id();
  return x.tape().record(num::transpose(x.value()), {x}, [ix](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gx(c, r) += g(r, c);
  });
}

Var repeat_rows(Var x, std::size_t n) {
  const Tensor& xv = x.value();
  if (xv.rows() != 1) throw ShapeError("repeat_rows: expected a single row");
  const std::size_t m = xv.cols();
  Tensor y = Tensor::matrix(n, m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) y(r, c) = xv[c];
  const std::uint32_t ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gx[c] += g(r, c);
  });
}

Var pick_cols(Var x, std::span<const std::size_t> cols) {
  require_rank2(x, "pick_cols");
  const Tensor& xv = x.value();
  if (cols.size() != xv.rows()) throw ShapeError("pick_cols: one column index per row required");
  Tensor y = Tensor::matrix(xv.rows(), 1);
  for (std::size_t r = 0; r < cols.size(); ++r) {
    if (cols[r] >= xv.cols()) throw ShapeError("pick_cols: column out of range");
    y(r, 0) = xv(r, cols[r]);
  }
  const std::uint32_t ix = x.id();
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return x.tape().record(std::move(y), {x}, [ix, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < idx.size(); ++r) gx(r, idx[r]) += g(r, 0);
  });
}

}  // namespace ticon::num::ops
