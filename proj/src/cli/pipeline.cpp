// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/cli/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "ticon/binio.hpp"
#include "ticon/model/checkpoint.hpp"
#include "ticon/parallel.hpp"
#include "ticon/rng.hpp"

namespace ticon::cli {

std::vector<std::string> pretrain_encoders(const RunConfig& cfg, const synth::EncoderRegistry& registry) {
  std::vector<std::string> out;
  for (const auto& id : registry.ids()) {
    const bool used = std::count(cfg.train.inputs.begin(), cfg.train.inputs.end(), id) ||
                      std::count(cfg.train.targets.begin(), cfg.train.targets.end(), id);
    if (used) out.push_back(id);
  }
  return out;
}

train::Corpus pretrain_corpus(const RunConfig& cfg, const synth::EncoderRegistry& registry, bool heldout) {
  const Cohort& c = heldout ? cfg.corpus.heldout : cfg.corpus.train;
  const std::uint64_t seed = stream_seed(cfg.corpus.candidate_seed, heldout ? "heldout" : "train");
  const auto seeds = c.seeds();
  return train::build_corpus(cfg.synth, registry, pretrain_encoders(cfg, registry), seeds, cfg.candidates(), seed);
}

train::Corpus adapt_corpus(const RunConfig& cfg, const synth::EncoderRegistry& registry, const std::string& id) {
  const auto seeds = cfg.adapt.corpus.seeds();
  return train::build_corpus(cfg.synth, registry, {id}, seeds, cfg.candidates(),
                             stream_seed(cfg.corpus.candidate_seed, "adapt/" + id));
}

eval::BenchSlides bench_slides(const RunConfig& cfg, const synth::EncoderRegistry& registry,
                               const std::string& encoder_id) {
  return eval::make_bench_slides(cfg.synth, registry, encoder_id, cfg.eval.slides.seeds());
}

std::vector<agg::SlidePair> aggregate_pairs(const RunConfig& cfg, const synth::EncoderRegistry& registry,
                                            AggCohort cohort, agg::Source source,
                                            const model::TiconParams* params) {
  const auto& a = cfg.aggregate;
  const Cohort& c = cohort == AggCohort::kTrain ? a.train : cohort == AggCohort::kHeldout ? a.heldout : a.probe;
  const eval::BenchSlides b = eval::make_bench_slides(cfg.synth, registry, a.encoder, c.seeds());
  return agg::make_slide_pairs(b.slides, b.grids, source, params, a.encoder);
}

std::vector<eval::Split> probe_splits(const RunConfig& cfg) {
  eval::BenchConfig bc = cfg.eval.bench;
  bc.seed = cfg.aggregate.split_seed;
  return eval::slide_splits(cfg.aggregate.probe.slides, bc);
}

agg::AggResult train_aggregator(const RunConfig& cfg, const synth::EncoderRegistry& registry, agg::Source source,
                                const model::TiconParams* params, const std::filesystem::path& out_dir) {
  const auto tr = aggregate_pairs(cfg, registry, AggCohort::kTrain, source, params);
  const auto ho = aggregate_pairs(cfg, registry, AggCohort::kHeldout, source, params);
  agg::AggOptions o;
  o.out_dir = out_dir;
  o.init_seed = cfg.aggregate.init_seed;
  return agg::pretrain_aggregator(tr, ho, cfg.aggregate.cfg, o);
}

std::vector<eval::EvalReport> slide_reports(const RunConfig& cfg, const synth::EncoderRegistry& registry,
                                            agg::Source source, const model::TiconParams* params,
                                            const agg::AbmilParams* aggregator) {
  const auto pairs = aggregate_pairs(cfg, registry, AggCohort::kProbe, source, params);
  const auto split = probe_splits(cfg);
  std::vector<eval::EvalReport> out;
  auto add = [&](const num::Tensor& f, const std::string& name) {
    eval::EvalReport r = agg::slide_probe(f, pairs, split);
    r.variant = name + "-" + agg::source_name(source);
    r.seed = cfg.aggregate.split_seed;
    out.push_back(std::move(r));
  };
  if (aggregator) add(agg::embed_slides(*aggregator, pairs), "tangle");
  add(agg::meanpool_slides(pairs), "meanpool");
  return out;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const synth::EncoderRegistry& registry, const std::vector<std::filesystem::path>& artifacts) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.txt", std::ios::trunc) << cfg.render();
  KvText kv;
  kv.set("output.command", command);
  kv.set("output.registry_digest", registry.digest());
  for (const auto& a : artifacts) {
    const auto name = a.filename().string();
    kv.set("artifact." + name, ckpt::content_hash(io::read_file(a)));
  }
  std::ofstream(dir / "manifest.txt", std::ios::trunc) << kv.render();
}

}  // namespace ticon::cli
