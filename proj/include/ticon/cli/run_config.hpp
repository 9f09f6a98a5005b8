// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ticon/agg/tangle.hpp"
#include "ticon/eval/benchmark.hpp"
#include "ticon/model/config.hpp"
#include "ticon/synth/candidates.hpp"
#include "ticon/synth/encoder.hpp"
#include "ticon/synth/slide.hpp"
#include "ticon/train/ofmm.hpp"

namespace ticon::cli {

/// A cohort of consecutive slide seeds.
struct Cohort {
  std::uint64_t base = 0;
  std::size_t slides = 0;
  std::vector<std::uint64_t> seeds() const;
  friend bool operator==(const Cohort&, const Cohort&) = default;
};

struct CorpusSpec {
  Cohort train{1000, 64};
  Cohort heldout{9000, 16};
  double min_tissue = 0.55;
  std::size_t max_per_slide = 20;
  std::uint64_t candidate_seed = 0;
  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

struct AdaptSpec {
  train::AdaptConfig cfg{};
  Cohort corpus{3000, 64};
};

struct EvalSpec {
  std::string encoder = "enc-a";
  Cohort slides{50000, 40};
  eval::BenchConfig bench{};
};

struct AggregateSpec {
  agg::AggTrainConfig cfg{};
  std::string encoder = "enc-a";
  Cohort train{20000, 256};
  Cohort heldout{30000, 64};
  Cohort probe{40000, 200};
  std::uint64_t init_seed = 0;
  std::uint64_t split_seed = 0;
};

/// Every tunable of a pipeline run. Text form is sectioned key=value (see
/// docs/cli.md); unknown keys are rejected. Component seeds not given
/// explicitly derive from run.seed through named sub-streams, and the
/// resolved text always lists them.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  synth::SynthConfig synth{};
  CorpusSpec corpus{};
  model::ModelConfig model{};  // architecture only; encoder lists come from train
  std::uint64_t init_seed = 0;
  train::TrainConfig train{};
  bool explicit_encoder_lists = false;
  AdaptSpec adapt{};
  EvalSpec eval{};
  AggregateSpec aggregate{};

  /// Desk defaults with seeds derived from `seed`.
  static RunConfig defaults(const synth::EncoderRegistry& registry, std::uint64_t seed = 1);
  /// ConfigError naming the offending key or line.
  static RunConfig parse(std::string_view text, const synth::EncoderRegistry& registry);
  std::string render() const;

  /// Switches the OFMM mode, re-deriving the encoder lists unless the config
  /// named them.
  void set_mode(train::Mode mode, const synth::EncoderRegistry& registry);
  synth::CandidateConfig candidates() const { return {train.window, corpus.min_tissue, corpus.max_per_slide}; }
};

}  // namespace ticon::cli
