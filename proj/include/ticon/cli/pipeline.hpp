// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ticon/agg/tangle.hpp"
#include "ticon/cli/run_config.hpp"
#include "ticon/eval/benchmark.hpp"
#include "ticon/train/corpus.hpp"

/// Data assembly shared by the subcommands, so every entry point derives the
/// same cohorts from one RunConfig.
namespace ticon::cli {

/// Encoders the OFMM run reads: inputs plus targets, registry order.
std::vector<std::string> pretrain_encoders(const RunConfig& cfg, const synth::EncoderRegistry& registry);

train::Corpus pretrain_corpus(const RunConfig& cfg, const synth::EncoderRegistry& registry, bool heldout);
train::Corpus adapt_corpus(const RunConfig& cfg, const synth::EncoderRegistry& registry, const std::string& id);

eval::BenchSlides bench_slides(const RunConfig& cfg, const synth::EncoderRegistry& registry,
                               const std::string& encoder_id);

enum class AggCohort { kTrain, kHeldout, kProbe };
std::vector<agg::SlidePair> aggregate_pairs(const RunConfig& cfg, const synth::EncoderRegistry& registry,
                                            AggCohort cohort, agg::Source source,
                                            const model::TiconParams* params);
std::vector<eval::Split> probe_splits(const RunConfig& cfg);

/// Trains on the config's train / held-out cohorts.
agg::AggResult train_aggregator(const RunConfig& cfg, const synth::EncoderRegistry& registry, agg::Source source,
                                const model::TiconParams* params, const std::filesystem::path& out_dir);

/// Tangle (when `aggregator` is given) and meanpool reports on the probe
/// cohort, variants named "tangle-<source>" / "meanpool-<source>".
std::vector<eval::EvalReport> slide_reports(const RunConfig& cfg, const synth::EncoderRegistry& registry,
                                            agg::Source source, const model::TiconParams* params,
                                            const agg::AbmilParams* aggregator);

/// Writes config.txt (resolved) and manifest.txt (command, registry digest,
/// artifact content hashes) into `dir`.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const synth::EncoderRegistry& registry, const std::vector<std::filesystem::path>& artifacts);

}  // namespace ticon::cli
