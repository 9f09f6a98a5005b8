// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/synth/candidates.hpp"

#include <algorithm>

#include "ticon/errors.hpp"
#include "ticon/rng.hpp"

namespace ticon::synth {

std::vector<Candidate> sample_candidates(std::span<const std::uint8_t> validity, std::size_t rows,
                                         std::size_t cols, const CandidateConfig& cfg,
                                         std::uint64_t seed, std::size_t slide_index) {
  if (validity.size() != rows * cols) throw ShapeError("validity mask does not match slide extents");
  if (cfg.k == 0 || cfg.k > rows || cfg.k > cols) {
    throw ConfigError("candidate size K=" + std::to_string(cfg.k) + " exceeds the slide");
  }
  // Summed-area table for O(1) window tissue counts.
  std::vector<std::size_t> sat((rows + 1) * (cols + 1), 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      sat[(r + 1) * (cols + 1) + c + 1] = (validity[r * cols + c] ? 1 : 0) + sat[r * (cols + 1) + c + 1] +
                                          sat[(r + 1) * (cols + 1) + c] - sat[r * (cols + 1) + c];
  const std::size_t k = cfg.k;
  const double area = static_cast<double>(k * k);
  std::vector<Candidate> feasible;
  for (std::size_t r = 0; r + k <= rows; ++r)
    for (std::size_t c = 0; c + k <= cols; ++c) {
      const std::size_t n = sat[(r + k) * (cols + 1) + c + k] - sat[r * (cols + 1) + c + k] -
                            sat[(r + k) * (cols + 1) + c] + sat[r * (cols + 1) + c];
      const double frac = static_cast<double>(n) / area;
      if (n > 0 && frac >= cfg.min_tissue) feasible.push_back({slide_index, r, c, k, frac});
    }
  Rng rng = Rng::stream(seed, "candidates");
  std::vector<Candidate> out;
  const std::size_t take = std::min(cfg.max_per_slide, feasible.size());
  for (std::size_t i : rng.sample_without_replacement(feasible.size(), take)) out.push_back(feasible[i]);
  return out;
}

}  // namespace ticon::synth
