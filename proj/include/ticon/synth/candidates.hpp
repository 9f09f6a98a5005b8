// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ticon::synth {

struct Candidate {
  std::size_t slide = 0;  // index into the caller's slide list
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t k = 0;
  double tissue_fraction = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateConfig {
  std::size_t k = 16;
  double min_tissue = 0.55;
  std::size_t max_per_slide = 20;
};

/// Draws up to `max_per_slide` distinct K x K windows uniformly without
/// replacement from the windows whose tissue fraction reaches `min_tissue`.
/// Returned in draw order. An empty result is not an error.
std::vector<Candidate> sample_candidates(std::span<const std::uint8_t> validity, std::size_t rows,
                                         std::size_t cols, const CandidateConfig& cfg,
                                         std::uint64_t seed, std::size_t slide_index = 0);

}  // namespace ticon::synth
