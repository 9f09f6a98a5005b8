// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ticon/agg/abmil.hpp"
#include "ticon/eval/probes.hpp"
#include "ticon/kvtext.hpp"
#include "ticon/model/params.hpp"
#include "ticon/numerics/optim.hpp"
#include "ticon/synth/grid.hpp"
#include "ticon/synth/slide.hpp"

namespace ticon::agg {

enum class Source { kRaw, kCtx };

std::string source_name(Source s);
Source parse_source(const std::string& s);

struct SlidePair {
  std::uint64_t slide_id = 0;
  num::Tensor tiles;  // valid tiles, row-major over the grid
  std::vector<double> gene;
  int label = 0;
};

/// Raw pairs hold the tile embeddings of each grid; ctx pairs hold the
/// contextual outputs (D wide) of the whole grid, computed once here.
/// ShapeError when slides and grids do not line up, ConfigError when ctx is
/// requested without parameters.
std::vector<SlidePair> make_slide_pairs(const std::vector<synth::SyntheticSlide>& slides,
                                        const std::vector<synth::EmbeddingGrid>& grids, Source source,
                                        const model::TiconParams* params = nullptr,
                                        const std::string& encoder_id = "");

struct AggTrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_tokens = 256;
  num::Schedule sched{1e-3, 50, 1000, 0.1};
  num::AdamWHyper hyper{};
  double temperature = 0.1;
  std::size_t hidden = 64;
  std::size_t attn_dim = 64;
  std::size_t heads = 2;
  std::size_t slide_dim = 64;
  AttentionKind attention = AttentionKind::kGated;
  std::uint64_t seed = 0x7A9C1Eull;
  std::int64_t eval_interval = 100;

  void validate() const;
  AbmilConfig model_config(std::size_t tile_dim, std::size_t gene_dim) const;
  void write(KvText& kv, const std::string& section = "aggregate") const;
  static AggTrainConfig read(const KvText& kv, const std::string& section = "aggregate");
  friend bool operator==(const AggTrainConfig&, const AggTrainConfig&) = default;
};

struct AggStep {
  std::int64_t iter = 0;
  double lr = 0.0;
  double loss = 0.0;
  double wallclock_ms = 0.0;
  std::string to_json() const;
};

struct AggEval {
  std::int64_t iter = 0;
  double loss = 0.0;
  double retrieval = 0.0;  // top-1, both directions
  double chance = 0.0;
  std::string to_json() const;
};

struct AggOptions {
  std::filesystem::path out_dir;  // empty: no files
  bool deterministic = true;
  std::uint64_t init_seed = 1;
};

struct AggResult {
  AbmilParams params;
  std::vector<AggStep> steps;
  std::vector<AggEval> evals;
  std::filesystem::path checkpoint;
};

/// Held-out loss and retrieval over consecutive batches of batch_size pairs
/// (a short tail joins the previous batch), every bag pooled in full.
AggEval evaluate_aggregator(const AbmilParams& params, const std::vector<SlidePair>& heldout,
                            const AggTrainConfig& cfg);

/// Joint AdamW training of the pooling network and gene branch. Bags larger
/// than max_tokens are subsampled per step from a (seed, iteration) stream.
/// Writes metrics.jsonl, eval.jsonl and aggregator.tck when out_dir is set.
/// EmptyInputError for an empty corpus, BatchError for fewer than 2 held-out
/// pairs.
AggResult pretrain_aggregator(const std::vector<SlidePair>& train, const std::vector<SlidePair>& heldout,
                              const AggTrainConfig& cfg, const AggOptions& opts = {});

void save_aggregator(const AbmilParams& params, const std::filesystem::path& path, const KvText& meta = {});
/// FormatError when the manifest disagrees with the stored config.
AbmilParams load_aggregator(const std::filesystem::path& path);

/// One pooled row per pair.
num::Tensor embed_slides(const AbmilParams& params, const std::vector<SlidePair>& pairs);
num::Tensor meanpool_slides(const std::vector<SlidePair>& pairs);

/// Linear probe on the pooled vectors alone, labels from the pairs.
eval::EvalReport slide_probe(const num::Tensor& features, const std::vector<SlidePair>& pairs,
                             const std::vector<eval::Split>& split, const eval::LinearProbeConfig& cfg = {});

}  // namespace ticon::agg
