// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ticon/numerics/tape.hpp"

namespace ticon::num {

/// AdamW moments, one pair per parameter, in the order the parameters were
/// passed to the first step.
struct OptState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step_count = 0;
};

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double weight_decay = 0.05;
  double eps = 1e-8;

  friend bool operator==(const AdamWHyper&, const AdamWHyper&) = default;
};

/// One decoupled-weight-decay Adam step over `params` using their `grad`
/// fields:
///   p <- p * (1 - lr * wd)           (only for params with decay = true)
///   p <- p - lr * mhat / (sqrt(vhat) + eps)
/// with bias-corrected moments. Moments are created on the first call; later
/// calls must pass parameters of identical shapes in the same order.
void adamw_step(std::span<Parameter* const> params, OptState& state, double lr,
                const AdamWHyper& hyper);

/// Linear warmup followed by cosine decay to floor_fraction * base_lr.
struct Schedule {
  double base_lr = 2e-4;
  std::int64_t warmup_iters = 200;
  std::int64_t total_iters = 2000;
  double floor_fraction = 0.1;

  void validate() const;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

double lr_at(std::int64_t iter, const Schedule& sched);

}  // namespace ticon::num
