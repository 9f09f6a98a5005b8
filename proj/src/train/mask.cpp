// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/train/mask.hpp"

#include <algorithm>
#include <cmath>

#include "ticon/errors.hpp"
#include "ticon/rng.hpp"

namespace ticon::train {

MaskPlan make_mask_plan(std::span<const std::uint8_t> validity, std::size_t rows, std::size_t cols, double m_r,
                        double p_r, std::uint64_t seed) {
  if (validity.size() != rows * cols) throw ShapeError("make_mask_plan: validity size does not match extents");
  if (!(m_r > 0.0 && m_r < 1.0 && p_r > 0.0 && p_r <= m_r)) {
    throw ConfigError("make_mask_plan: ratios must satisfy 0 < p_r <= m_r < 1");
  }
  std::vector<model::GridPos> valid;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (validity[r * cols + c]) valid.push_back({static_cast<std::int32_t>(r), static_cast<std::int32_t>(c)});
  const std::size_t n = valid.size();
  if (n < 2) throw DegenerateGridError("make_mask_plan: need at least 2 valid positions, got " + std::to_string(n));

  const auto n_mask = static_cast<std::size_t>(
      std::clamp<double>(std::round(m_r * static_cast<double>(n)), 1.0, static_cast<double>(n - 1)));
  const auto n_pred = std::min(n_mask, std::max<std::size_t>(1, static_cast<std::size_t>(std::round(p_r * n))));

  MaskPlan plan;
  plan.m_r = m_r;
  plan.p_r = p_r;
  plan.seed = seed;
  Rng rng(seed);
  std::vector<std::uint8_t> is_masked(n, 0);
  for (std::size_t i : rng.sample_without_replacement(n, n_mask)) {
    is_masked[i] = 1;
    plan.masked.push_back(valid[i]);
  }
  for (std::size_t i : rng.sample_without_replacement(n_mask, n_pred)) plan.predicted.push_back(plan.masked[i]);
  for (std::size_t i = 0; i < n; ++i)
    if (!is_masked[i]) plan.visible.push_back(valid[i]);
  return plan;
}

}  // namespace ticon::train
