// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ticon/synth/candidates.hpp"
#include "ticon/synth/encoder.hpp"
#include "ticon/synth/grid.hpp"
#include "ticon/synth/slide.hpp"

namespace ticon::train {

/// Aligned grids of one slide or window, keyed by encoder id.
using GridSet = std::map<std::string, synth::EmbeddingGrid>;

/// Pre-encoded slides plus the candidate windows sampled from them. Training
/// crops windows out of the cached full-slide grids and never calls the mock
/// encoders itself.
struct Corpus {
  std::vector<std::uint64_t> slide_seeds;
  std::vector<GridSet> slides;
  std::vector<synth::Candidate> candidates;
  std::string registry_digest;

  bool has_encoder(const std::string& id) const;
  /// The K x K window of every encoder at candidate `i`.
  GridSet window(std::size_t i) const;
};

Corpus build_corpus(const synth::SynthConfig& synth_cfg, const synth::EncoderRegistry& registry,
                    const std::vector<std::string>& encoder_ids, std::span<const std::uint64_t> slide_seeds,
                    const synth::CandidateConfig& cand_cfg, std::uint64_t candidate_seed);

/// Consecutive seeds base, base+1, ... (the corpus convention for slides).
std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t n);

/// Throws AlignmentError unless every grid shares extents, origin and validity.
void check_aligned(const GridSet& grids);

}  // namespace ticon::train
