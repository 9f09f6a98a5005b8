// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/cli/run_config.hpp"

#include <sstream>

#include "ticon/errors.hpp"
#include "ticon/rng.hpp"
#include "ticon/train/corpus.hpp"

namespace ticon::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': '" + s + "' is not a number");
}

std::uint64_t u64(std::size_t v) { return static_cast<std::uint64_t>(v); }

void read_cohort(const KvText& kv, const std::string& prefix, Cohort& c) {
  c.base = kv.get_u64_or(prefix + "_base", c.base);
  c.slides = kv.get_u64_or(prefix + "_slides", c.slides);
  if (c.slides == 0) throw ConfigError("'" + prefix + "_slides' must be positive");
}

void write_cohort(KvText& kv, const std::string& prefix, const Cohort& c) {
  kv.set(prefix + "_base", c.base);
  kv.set(prefix + "_slides", u64(c.slides));
}

}  // namespace

std::vector<std::uint64_t> Cohort::seeds() const { return train::seed_range(base, slides); }

RunConfig RunConfig::defaults(const synth::EncoderRegistry& registry, std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.train = train::desk_train_config(registry);
  c.train.seed = stream_seed(seed, "train");
  c.corpus.candidate_seed = stream_seed(seed, "corpus/candidates");
  c.init_seed = stream_seed(seed, "model/init");
  c.adapt.cfg.seed = stream_seed(seed, "adapt");
  c.eval.bench.seed = stream_seed(seed, "eval/split");
  c.aggregate.cfg.seed = stream_seed(seed, "aggregate");
  c.aggregate.init_seed = stream_seed(seed, "aggregate/init");
  c.aggregate.split_seed = stream_seed(seed, "aggregate/split");
  return c;
}

void RunConfig::set_mode(train::Mode mode, const synth::EncoderRegistry& registry) {
  if (!explicit_encoder_lists) {
    const train::TrainConfig d = train::desk_train_config(registry, mode);
    train.inputs = d.inputs;
    train.targets = d.targets;
  }
  train.mode = mode;
  train.validate();
}

RunConfig RunConfig::parse(std::string_view text, const synth::EncoderRegistry& registry) {
  KvText kv = KvText::parse(text);
  RunConfig c = defaults(registry, kv.get_u64_or("run.seed", 1));
  c.threads = kv.get_u64_or("run.threads", c.threads);
  if (c.threads == 0) throw ConfigError("'run.threads' must be positive");

  auto& s = c.synth;
  s.rows = kv.get_u64_or("synth.rows", s.rows);
  s.cols = kv.get_u64_or("synth.cols", s.cols);
  s.regions = kv.get_u64_or("synth.regions", s.regions);
  s.latent_dim = kv.get_u64_or("synth.latent_dim", s.latent_dim);
  s.genes = kv.get_u64_or("synth.genes", s.genes);
  s.spot_genes = kv.get_u64_or("synth.spot_genes", s.spot_genes);
  s.alias_pair.first = kv.get_u64_or("synth.alias_a", s.alias_pair.first);
  s.alias_pair.second = kv.get_u64_or("synth.alias_b", s.alias_pair.second);
  s.background_fraction = kv.get_double_or("synth.background_fraction", s.background_fraction);
  s.marker_fraction = kv.get_double_or("synth.marker_fraction", s.marker_fraction);
  s.region_block = kv.get_u64_or("synth.region_block", s.region_block);
  s.region_noise = kv.get_double_or("synth.region_noise", s.region_noise);
  s.class_separation = kv.get_double_or("synth.class_separation", s.class_separation);
  s.latent_noise = kv.get_double_or("synth.latent_noise", s.latent_noise);
  s.quadrant_jitter = kv.get_double_or("synth.quadrant_jitter", s.quadrant_jitter);
  s.gene_noise = kv.get_double_or("synth.gene_noise", s.gene_noise);
  s.world_seed = kv.get_u64_or("synth.world_seed", s.world_seed);
  s.validate();
  if (s.latent_dim != registry.specs().front().latent_dim) {
    throw ConfigError("'synth.latent_dim' must match the encoder registry (" +
                      std::to_string(registry.specs().front().latent_dim) + ")");
  }

  read_cohort(kv, "corpus.train", c.corpus.train);
  read_cohort(kv, "corpus.heldout", c.corpus.heldout);
  c.corpus.min_tissue = kv.get_double_or("corpus.min_tissue", c.corpus.min_tissue);
  c.corpus.max_per_slide = kv.get_u64_or("corpus.max_per_slide", c.corpus.max_per_slide);
  c.corpus.candidate_seed = kv.get_u64_or("corpus.candidate_seed", c.corpus.candidate_seed);

  auto& m = c.model;
  m.d_model = kv.get_u64_or("model.d_model", m.d_model);
  m.encoder_depth = kv.get_u64_or("model.encoder_depth", m.encoder_depth);
  m.decoder_depth = kv.get_u64_or("model.decoder_depth", m.decoder_depth);
  m.heads = kv.get_u64_or("model.heads", m.heads);
  m.mlp_ratio = kv.get_double_or("model.mlp_ratio", m.mlp_ratio);
  m.projector_hidden = kv.get_u64_or("model.projector_hidden", m.projector_hidden);
  m.decoder_self_attention = kv.get_bool_or("model.decoder_self_attention", m.decoder_self_attention);
  c.init_seed = kv.get_u64_or("model.init_seed", c.init_seed);

  // Encoder lists default to the mode's desk lists; the seed to the derived one.
  const train::Mode mode = train::parse_mode(kv.get_or("train.mode", train::mode_name(c.train.mode)));
  c.explicit_encoder_lists = kv.has("train.inputs") || kv.has("train.targets");
  const train::TrainConfig desk = train::desk_train_config(registry, mode);
  if (!kv.has("train.inputs")) kv.set("train.inputs", join(desk.inputs, [](const std::string& x) { return x; }));
  if (!kv.has("train.targets")) kv.set("train.targets", join(desk.targets, [](const std::string& x) { return x; }));
  if (!kv.has("train.seed")) kv.set("train.seed", c.train.seed);
  c.train = train::TrainConfig::read(kv);
  for (const auto* list : {&c.train.inputs, &c.train.targets})
    for (const auto& id : *list)
      if (!registry.contains(id)) throw ConfigError("train: unknown encoder id '" + id + "'");
  train::model_config_for(c.train, registry, c.model).validate();

  auto& a = c.adapt.cfg;
  a.iters = static_cast<std::int64_t>(kv.get_u64_or("adapt.iters", a.iters));
  a.batch_size = kv.get_u64_or("adapt.batch_size", a.batch_size);
  a.base_lr = kv.get_double_or("adapt.base_lr", a.base_lr);
  a.warmup = static_cast<std::int64_t>(kv.get_u64_or("adapt.warmup_iters", a.warmup));
  a.m_r = kv.get_double_or("adapt.m_r", a.m_r);
  a.p_r = kv.get_double_or("adapt.p_r", a.p_r);
  a.seed = kv.get_u64_or("adapt.seed", a.seed);
  a.window = c.train.window;
  read_cohort(kv, "adapt.corpus", c.adapt.corpus);
  if (a.iters <= 0 || a.warmup <= 0 || a.warmup > a.iters || a.batch_size == 0) {
    throw ConfigError("adapt: need 0 < warmup_iters <= iters and a positive batch_size");
  }

  auto& e = c.eval;
  e.encoder = kv.get_or("eval.encoder", e.encoder);
  read_cohort(kv, "eval.cohort", e.slides);
  auto& b = e.bench;
  if (kv.has("eval.ks")) {
    b.ks.clear();
    for (const auto& k : split_list(kv.get("eval.ks"))) b.ks.push_back(static_cast<std::size_t>(parse_double("eval.ks", k)));
  }
  if (kv.has("eval.lambdas")) {
    b.lambdas.clear();
    for (const auto& l : split_list(kv.get("eval.lambdas"))) b.lambdas.push_back(parse_double("eval.lambdas", l));
  }
  if (b.ks.empty() || b.lambdas.empty()) throw ConfigError("eval: ks and lambdas must be non-empty");
  b.pca_dims = kv.get_u64_or("eval.pca_dims", b.pca_dims);
  b.seed = kv.get_u64_or("eval.seed", b.seed);
  b.train_fraction = kv.get_double_or("eval.train_fraction", b.train_fraction);
  b.val_fraction = kv.get_double_or("eval.val_fraction", b.val_fraction);
  b.context_window = kv.get_u64_or("eval.context_window", b.context_window);
  if (!registry.contains(e.encoder)) throw ConfigError("eval: unknown encoder id '" + e.encoder + "'");

  auto& g = c.aggregate;
  if (!kv.has("aggregate.seed")) kv.set("aggregate.seed", g.cfg.seed);
  g.cfg = agg::AggTrainConfig::read(kv);
  g.encoder = kv.get_or("aggregate.encoder", g.encoder);
  read_cohort(kv, "aggregate.train", g.train);
  read_cohort(kv, "aggregate.heldout", g.heldout);
  read_cohort(kv, "aggregate.probe", g.probe);
  g.init_seed = kv.get_u64_or("aggregate.init_seed", g.init_seed);
  g.split_seed = kv.get_u64_or("aggregate.split_seed", g.split_seed);
  if (!registry.contains(g.encoder)) throw ConfigError("aggregate: unknown encoder id '" + g.encoder + "'");

  kv.reject_unconsumed();
  return c;
}

std::string RunConfig::render() const {
  KvText kv;
  kv.set("run.seed", seed);
  kv.set("run.threads", u64(threads));

  const auto& s = synth;
  kv.set("synth.rows", u64(s.rows));
  kv.set("synth.cols", u64(s.cols));
  kv.set("synth.regions", u64(s.regions));
  kv.set("synth.latent_dim", u64(s.latent_dim));
  kv.set("synth.genes", u64(s.genes));
  kv.set("synth.spot_genes", u64(s.spot_genes));
  kv.set("synth.alias_a", u64(s.alias_pair.first));
  kv.set("synth.alias_b", u64(s.alias_pair.second));
  kv.set("synth.background_fraction", s.background_fraction);
  kv.set("synth.marker_fraction", s.marker_fraction);
  kv.set("synth.region_block", u64(s.region_block));
  kv.set("synth.region_noise", s.region_noise);
  kv.set("synth.class_separation", s.class_separation);
  kv.set("synth.latent_noise", s.latent_noise);
  kv.set("synth.quadrant_jitter", s.quadrant_jitter);
  kv.set("synth.gene_noise", s.gene_noise);
  kv.set("synth.world_seed", s.world_seed);

  write_cohort(kv, "corpus.train", corpus.train);
  write_cohort(kv, "corpus.heldout", corpus.heldout);
  kv.set("corpus.min_tissue", corpus.min_tissue);
  kv.set("corpus.max_per_slide", u64(corpus.max_per_slide));
  kv.set("corpus.candidate_seed", corpus.candidate_seed);

  kv.set("model.d_model", u64(model.d_model));
  kv.set("model.encoder_depth", u64(model.encoder_depth));
  kv.set("model.decoder_depth", u64(model.decoder_depth));
  kv.set("model.heads", u64(model.heads));
  kv.set("model.mlp_ratio", model.mlp_ratio);
  kv.set("model.projector_hidden", u64(model.projector_hidden));
  kv.set("model.decoder_self_attention", model.decoder_self_attention);
  kv.set("model.init_seed", init_seed);

  train.write(kv);

  kv.set("adapt.iters", static_cast<std::uint64_t>(adapt.cfg.iters));
  kv.set("adapt.batch_size", u64(adapt.cfg.batch_size));
  kv.set("adapt.base_lr", adapt.cfg.base_lr);
  kv.set("adapt.warmup_iters", static_cast<std::uint64_t>(adapt.cfg.warmup));
  kv.set("adapt.m_r", adapt.cfg.m_r);
  kv.set("adapt.p_r", adapt.cfg.p_r);
  kv.set("adapt.seed", adapt.cfg.seed);
  write_cohort(kv, "adapt.corpus", adapt.corpus);

  kv.set("eval.encoder", eval.encoder);
  write_cohort(kv, "eval.cohort", eval.slides);
  kv.set("eval.ks", join(eval.bench.ks, [](std::size_t k) { return std::to_string(k); }));
  kv.set("eval.lambdas", join(eval.bench.lambdas, [](double l) { return format_double(l); }));
  kv.set("eval.pca_dims", u64(eval.bench.pca_dims));
  kv.set("eval.seed", eval.bench.seed);
  kv.set("eval.train_fraction", eval.bench.train_fraction);
  kv.set("eval.val_fraction", eval.bench.val_fraction);
  kv.set("eval.context_window", u64(eval.bench.context_window));

  aggregate.cfg.write(kv);
  kv.set("aggregate.encoder", aggregate.encoder);
  write_cohort(kv, "aggregate.train", aggregate.train);
  write_cohort(kv, "aggregate.heldout", aggregate.heldout);
  write_cohort(kv, "aggregate.probe", aggregate.probe);
  kv.set("aggregate.init_seed", aggregate.init_seed);
  kv.set("aggregate.split_seed", aggregate.split_seed);
  return kv.render();
}

}  // namespace ticon::cli
