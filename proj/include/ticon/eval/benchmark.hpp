// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <cstdint>
#include <string>
#include <vector>

#include "ticon/eval/probes.hpp"
#include "ticon/model/params.hpp"
#include "ticon/synth/grid.hpp"
#include "ticon/synth/slide.hpp"

namespace ticon::eval {

/// kClass covers every tile class; kAliased / kNonAliased restrict it to the
/// aliased pair or to the remaining classes.
enum class TileTask { kClass, kAliased, kNonAliased, kSpot };

std::string task_name(TileTask t);
/// Accepts "tile-class", "tile-aliased", "tile-nonaliased", "spot".
TileTask parse_task(const std::string& s);

/// Slides with their full grids under one encoder.
struct BenchSlides {
  std::vector<synth::SyntheticSlide> slides;
  std::vector<synth::EmbeddingGrid> grids;
};

BenchSlides make_bench_slides(const synth::SynthConfig& cfg, const synth::EncoderRegistry& registry,
                              const std::string& encoder_id, const std::vector<std::uint64_t>& seeds);

struct BenchConfig {
  std::vector<std::size_t> ks{1, 3, 5, 9, 15, 25};
  std::vector<double> lambdas{1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::size_t pca_dims = 256;
  std::uint64_t seed = 0;
  /// Slides are shuffled with `seed` and split train / val / test in these
  /// proportions (the remainder goes to test).
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  /// 0 contextualizes each slide as one grid; w > 0 splits it into
  /// non-overlapping w x w blocks (smaller at the edges) contextualized apart.
  std::size_t context_window = 0;
};

/// Per-tile feature sets over every valid tile of every slide. iso and ctx
/// are the raw embedding concatenated with the corresponding model output.
struct TileFeatures {
  num::Tensor raw, iso, ctx;
  std::vector<int> labels;
  num::Tensor spots;
  std::vector<Split> split;
};

/// Contextualized outputs of the valid tiles (row-major order) with the
/// grid cut into independent w x w blocks; w = 0 uses the whole grid.
num::Tensor blockwise_context(const model::TiconParams& params, const std::string& encoder_id,
                              const synth::EmbeddingGrid& grid, std::size_t w);

std::vector<Split> slide_splits(std::size_t n_slides, const BenchConfig& cfg);

TileFeatures tile_features(const model::TiconParams& params, const std::string& encoder_id,
                           const BenchSlides& bench, const BenchConfig& cfg);

/// Probe dataset of one task over one feature variant.
ProbeDataset task_dataset(const TileFeatures& f, const num::Tensor& features, TileTask task,
                          std::pair<std::size_t, std::size_t> alias_pair);

/// Runs the task's probe (k-NN macro-F1 for tile tasks, PCA + ridge mean PCC
/// for spots) on raw, iso and ctx, in that order.
std::vector<EvalReport> run_variants(const TileFeatures& f, TileTask task, std::pair<std::size_t, std::size_t> alias_pair,
                                     const BenchConfig& cfg);

std::vector<EvalReport> context_benchmark(const model::TiconParams& params, const std::string& encoder_id,
                                          const BenchSlides& bench, TileTask task, std::pair<std::size_t, std::size_t> alias_pair,
                                          const BenchConfig& cfg);

}  // namespace ticon::eval
