// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>

#include "ticon/numerics/tape.hpp"

namespace ticon::num {

/// Scalar-valued function built on a fresh tape from a leaf holding the input.
using ScalarFn = std::function<Var(Tape&, Var)>;

/// Compares the reverse-mode gradient of `f` at `x` with central differences.
/// Returns max_i |analytic_i - numeric_i| / max(1, |numeric_i|).
/// Throws NumericalError if any evaluation is non-finite.
double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

/// Same comparison with respect to model parameters, which `f` reads through
/// tape.param(). At most `entries_per_tensor` evenly strided components of
/// each tensor are probed (0 = all). Parameter grads are left zeroed.
double grad_check_params(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                         double eps = 1e-5, std::size_t entries_per_tensor = 0);

}  // namespace ticon::num
