// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ticon/numerics/tape.hpp"

/// Differentiable primitives. Every op takes rank-2 operands (row vectors are
/// 1 x n) and records its backward on the operands' tape.
namespace ticon::num::ops {

/// [n,k] x [k,m] -> [n,m].
Var matmul(Var a, Var b);
/// a * b^T: [n,k] x [m,k] -> [n,m].
Var matmul_nt(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise (Hadamard) product; shapes must match.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Elementwise product by a constant tensor of the same shape.
Var mul_const(Var a, const Tensor& c);

/// x[n,m] + bias[1,m], bias broadcast over rows.
Var add_row(Var x, Var bias);
/// x * w + b  (w: [in,out], b: [1,out]).
Var linear(Var x, Var w, Var b);

/// Per-row normalization to zero mean / unit variance followed by
/// gamma * xhat + beta, gamma and beta of shape [1,m]. Variance is the biased
/// (1/m) estimator.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

/// Row softmax of (x + bias). `bias` is a constant of the same shape as x or
/// nullptr; entries may be -inf to exclude a column (at least one finite
/// entry per row is required).
Var softmax_rows(Var x, const Tensor* bias = nullptr);
Var log_softmax_rows(Var x);

/// Exact GELU: x * Phi(x).
Var gelu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);

/// Divides each row by its Euclidean norm. A zero row is a NumericalError.
Var l2_normalize_rows(Var x);
/// Row-wise cosine similarity -> [n,1], computed as the dot product of the
/// normalized operands.
Var cosine_rows(Var a, Var b);

/// Mean of the selected rows -> [1,m]. The backward pass distributes
/// 1/|indices| to each gathered row (repeated indices accumulate).
Var mean_rows(Var x, std::span<const std::size_t> indices);
Var mean_rows(Var x);
Var sum(Var x);
Var mean(Var x);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(Var x, std::span<const std::size_t> indices);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var transpose(Var x);
/// [1,m] -> [n,m].
Var repeat_rows(Var x, std::size_t n);
/// out(i,0) = x(i, cols[i]).
Var pick_cols(Var x, std::span<const std::size_t> cols);

}  // namespace ticon::num::ops
