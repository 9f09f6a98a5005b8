// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ticon/model/ticon.hpp"

namespace ticon::train {

/// Partition of a grid's valid positions into visible and masked tokens,
/// with the prediction subset of the masked ones. Positions are grid-local.
struct MaskPlan {
  std::vector<model::GridPos> visible;    // row-major order
  std::vector<model::GridPos> masked;     // draw order
  std::vector<model::GridPos> predicted;  // draw order, subset of masked
  double m_r = 0.0;
  double p_r = 0.0;
  std::uint64_t seed = 0;
};

/// n_mask = clamp(round(m_r * n), 1, n - 1) positions masked uniformly
/// without replacement; |p| = min(n_mask, max(1, round(p_r * n))) drawn
/// uniformly from the masked set. Throws DegenerateGridError below two valid
/// positions and ConfigError for ratios outside 0 < p_r <= m_r < 1.
MaskPlan make_mask_plan(std::span<const std::uint8_t> validity, std::size_t rows, std::size_t cols, double m_r,
                        double p_r, std::uint64_t seed);

}  // namespace ticon::train
