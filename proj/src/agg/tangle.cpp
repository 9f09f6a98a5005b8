// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/agg/tangle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ticon/errors.hpp"
#include "ticon/model/checkpoint.hpp"
#include "ticon/model/ticon.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/parallel.hpp"
#include "ticon/rng.hpp"

namespace ticon::agg {

using num::Tensor;

std::string source_name(Source s) { return s == Source::kRaw ? "raw" : "ctx"; }

Source parse_source(const std::string& s) {
  if (s == "raw") return Source::kRaw;
  if (s == "ctx") return Source::kCtx;
  throw ConfigError("unknown aggregator source '" + s + "' (expected raw or ctx)");
}

std::vector<SlidePair> make_slide_pairs(const std::vector<synth::SyntheticSlide>& slides,
                                        const std::vector<synth::EmbeddingGrid>& grids, Source source,
                                        const model::TiconParams* params, const std::string& encoder_id) {
  if (slides.size() != grids.size()) throw ShapeError("slide pairs: one grid per slide required");
  if (source == Source::kCtx && !params) throw ConfigError("slide pairs: ctx source needs a TICON checkpoint");
  std::vector<SlidePair> out(slides.size());
  parallel_for(slides.size(), [&](std::size_t i) {
    if (grids[i].num_valid() == 0) throw EmptyInputError("slide pairs: slide without tissue");
    SlidePair& p = out[i];
    p.slide_id = slides[i].seed;
    p.tiles = source == Source::kRaw ? model::valid_rows(grids[i])
                                     : model::contextualize_valid(*params, encoder_id, grids[i]);
    p.gene = slides[i].gene_vector;
    p.label = slides[i].slide_label;
  });
  return out;
}

void AggTrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("aggregate: batch_size must be at least 2");
  if (max_tokens == 0) throw ConfigError("aggregate: max_tokens must be positive");
  if (!(temperature > 0)) throw ConfigError("aggregate: temperature must be positive");
  if (eval_interval <= 0) throw ConfigError("aggregate: eval_interval must be positive");
  sched.validate();
}

AbmilConfig AggTrainConfig::model_config(std::size_t tile_dim, std::size_t gene_dim) const {
  AbmilConfig c;
  c.tile_dim = tile_dim;
  c.gene_dim = gene_dim;
  c.hidden = hidden;
  c.attn_dim = attn_dim;
  c.heads = heads;
  c.slide_dim = slide_dim;
  c.attention = attention;
  c.validate();
  return c;
}

void AggTrainConfig::write(KvText& kv, const std::string& s) const {
  kv.set(s + ".batch_size", static_cast<std::uint64_t>(batch_size));
  kv.set(s + ".max_tokens", static_cast<std::uint64_t>(max_tokens));
  kv.set(s + ".base_lr", sched.base_lr);
  kv.set(s + ".warmup_iters", static_cast<std::uint64_t>(sched.warmup_iters));
  kv.set(s + ".total_iters", static_cast<std::uint64_t>(sched.total_iters));
  kv.set(s + ".lr_floor_fraction", sched.floor_fraction);
  kv.set(s + ".beta1", hyper.beta1);
  kv.set(s + ".beta2", hyper.beta2);
  kv.set(s + ".weight_decay", hyper.weight_decay);
  kv.set(s + ".eps", hyper.eps);
  kv.set(s + ".temperature", temperature);
  kv.set(s + ".hidden", static_cast<std::uint64_t>(hidden));
  kv.set(s + ".attn_dim", static_cast<std::uint64_t>(attn_dim));
  kv.set(s + ".heads", static_cast<std::uint64_t>(heads));
  kv.set(s + ".slide_dim", static_cast<std::uint64_t>(slide_dim));
  kv.set(s + ".attention", attention_name(attention));
  kv.set(s + ".seed", seed);
  kv.set(s + ".eval_interval", static_cast<std::uint64_t>(eval_interval));
}

AggTrainConfig AggTrainConfig::read(const KvText& kv, const std::string& s) {
  AggTrainConfig c;
  c.batch_size = kv.get_u64_or(s + ".batch_size", c.batch_size);
  c.max_tokens = kv.get_u64_or(s + ".max_tokens", c.max_tokens);
  c.sched.base_lr = kv.get_double_or(s + ".base_lr", c.sched.base_lr);
  c.sched.warmup_iters = static_cast<std::int64_t>(kv.get_u64_or(s + ".warmup_iters", c.sched.warmup_iters));
  c.sched.total_iters = static_cast<std::int64_t>(kv.get_u64_or(s + ".total_iters", c.sched.total_iters));
  c.sched.floor_fraction = kv.get_double_or(s + ".lr_floor_fraction", c.sched.floor_fraction);
  c.hyper.beta1 = kv.get_double_or(s + ".beta1", c.hyper.beta1);
  c.hyper.beta2 = kv.get_double_or(s + ".beta2", c.hyper.beta2);
  c.hyper.weight_decay = kv.get_double_or(s + ".weight_decay", c.hyper.weight_decay);
  c.hyper.eps = kv.get_double_or(s + ".eps", c.hyper.eps);
  c.temperature = kv.get_double_or(s + ".temperature", c.temperature);
  c.hidden = kv.get_u64_or(s + ".hidden", c.hidden);
  c.attn_dim = kv.get_u64_or(s + ".attn_dim", c.attn_dim);
  c.heads = kv.get_u64_or(s + ".heads", c.heads);
  c.slide_dim = kv.get_u64_or(s + ".slide_dim", c.slide_dim);
  c.attention = parse_attention(kv.get_or(s + ".attention", attention_name(c.attention)));
  c.seed = kv.get_u64_or(s + ".seed", c.seed);
  c.eval_interval = static_cast<std::int64_t>(kv.get_u64_or(s + ".eval_interval", c.eval_interval));
  c.validate();
  return c;
}

std::string AggStep::to_json() const {
  nlohmann::ordered_json j;
  j["iter"] = iter;
  j["lr"] = lr;
  j["loss"] = loss;
  j["wallclock_ms"] = wallclock_ms;
  return j.dump();
}

std::string AggEval::to_json() const {
  nlohmann::ordered_json j;
  j["iter"] = iter;
  j["heldout_loss"] = loss;
  j["retrieval_top1"] = retrieval;
  j["chance"] = chance;
  return j.dump();
}

namespace {

Tensor gene_matrix(const std::vector<const SlidePair*>& batch) {
  Tensor g = Tensor::matrix(batch.size(), batch.front()->gene.size());
  for (std::size_t i = 0; i < batch.size(); ++i) std::copy(batch[i]->gene.begin(), batch[i]->gene.end(), g.row_span(i).begin());
  return g;
}

Tensor subsample(const Tensor& tiles, std::size_t max_tokens, Rng& rng) {
  if (tiles.rows() <= max_tokens) return tiles;
  auto rows = rng.sample_without_replacement(tiles.rows(), max_tokens);
  std::sort(rows.begin(), rows.end());
  Tensor out = Tensor::matrix(max_tokens, tiles.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = tiles.row_span(rows[i]);
    std::copy(src.begin(), src.end(), out.row_span(i).begin());
  }
  return out;
}

void check_pairs(const std::vector<SlidePair>& pairs, std::size_t tile_dim, std::size_t gene_dim) {
  for (const auto& p : pairs) {
    if (p.tiles.rows() == 0) throw EmptyInputError("aggregate: slide " + std::to_string(p.slide_id) + " has no tiles");
    if (p.tiles.cols() != tile_dim || p.gene.size() != gene_dim) {
      throw ShapeError("aggregate: slide " + std::to_string(p.slide_id) + " differs in tile or gene width");
    }
  }
}

}  // namespace

AggEval evaluate_aggregator(const AbmilParams& params, const std::vector<SlidePair>& heldout,
                            const AggTrainConfig& cfg) {
  if (heldout.size() < 2) throw BatchError("aggregate: need at least 2 held-out pairs");
  const std::size_t b = std::min(cfg.batch_size, heldout.size());
  const std::size_t n_batches = heldout.size() / b;
  AggEval e;
  for (std::size_t k = 0; k < n_batches; ++k) {
    const std::size_t lo = k * b, hi = k + 1 == n_batches ? heldout.size() : lo + b;
    std::vector<const SlidePair*> batch;
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(&heldout[i]);
    Tensor slides = Tensor::matrix(batch.size(), params.config.slide_dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Tensor s = abmil_forward(params, batch[i]->tiles).slide;
      std::copy(s.data().begin(), s.data().end(), slides.row_span(i).begin());
    }
    const Tensor genes = gene_embed(params, gene_matrix(batch));
    e.loss += tangle_loss(slides, genes, cfg.temperature) / n_batches;
    e.retrieval += retrieval_top1(slides, genes) / n_batches;
    e.chance += 1.0 / batch.size() / n_batches;
  }
  return e;
}

AggResult pretrain_aggregator(const std::vector<SlidePair>& train, const std::vector<SlidePair>& heldout,
                              const AggTrainConfig& cfg, const AggOptions& opts) {
  cfg.validate();
  if (train.empty()) throw EmptyInputError("aggregate: empty training corpus");
  if (heldout.size() < 2) throw BatchError("aggregate: need at least 2 held-out pairs");
  const std::size_t tile_dim = train.front().tiles.cols(), gene_dim = train.front().gene.size();
  check_pairs(train, tile_dim, gene_dim);
  check_pairs(heldout, tile_dim, gene_dim);

  AggResult res;
  res.params = init_abmil(cfg.model_config(tile_dim, gene_dim), opts.init_seed);
  std::ofstream metrics, evals;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    metrics.open(opts.out_dir / "metrics.jsonl", std::ios::trunc);
    evals.open(opts.out_dir / "eval.jsonl", std::ios::trunc);
  }
  auto run_eval = [&](std::int64_t iter) {
    AggEval e = evaluate_aggregator(res.params, heldout, cfg);
    e.iter = iter;
    if (evals.is_open()) evals << e.to_json() << "\n" << std::flush;
    res.evals.push_back(e);
  };

  num::OptState opt;
  const auto params = res.params.all();
  const std::size_t b = std::min(cfg.batch_size, train.size());
  run_eval(0);
  for (std::int64_t iter = 0; iter < cfg.sched.total_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string key = std::to_string(iter);
    Rng batch_rng = Rng::stream(cfg.seed, "agg/batch/" + key);
    Rng token_rng = Rng::stream(cfg.seed, "agg/tokens/" + key);
    std::vector<const SlidePair*> batch;
    for (std::size_t i : batch_rng.sample_without_replacement(train.size(), b)) batch.push_back(&train[i]);

    res.params.zero_grad();
    num::Tape tape;
    std::vector<num::Var> slides;
    for (const SlidePair* p : batch)
      slides.push_back(abmil_pool(tape, res.params, tape.constant(subsample(p->tiles, cfg.max_tokens, token_rng))).slide);
    const num::Var genes = gene_branch(tape, res.params, tape.constant(gene_matrix(batch)));
    const num::Var loss = tangle_loss(num::ops::concat_rows(slides), genes, cfg.temperature);
    tape.backward(loss);
    AggStep m;
    m.iter = iter;
    m.lr = num::lr_at(iter, cfg.sched);
    m.loss = loss.value().item();
    if (!std::isfinite(m.loss)) throw NumericalError("aggregate: non-finite loss at iteration " + key);
    num::adamw_step(params, opt, m.lr, cfg.hyper);
    if (!opts.deterministic) {
      m.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    if (metrics.is_open()) metrics << m.to_json() << "\n";
    res.steps.push_back(m);
    if ((iter + 1) % cfg.eval_interval == 0 || iter + 1 == cfg.sched.total_iters) run_eval(iter + 1);
  }
  if (!opts.out_dir.empty()) {
    KvText meta;
    cfg.write(meta);
    res.checkpoint = opts.out_dir / "aggregator.tck";
    save_aggregator(res.params, res.checkpoint, meta);
  }
  return res;
}

void save_aggregator(const AbmilParams& params, const std::filesystem::path& path, const KvText& meta) {
  KvText kv;
  params.config.write(kv);
  for (const auto& [k, v] : meta.entries()) kv.set(k, v);
  ckpt::Container c;
  c.config = kv.render();
  for (const auto& [name, p] : params.tensors) c.tensors.push_back({name, p.value});
  ckpt::save(c, path, ckpt::DType::kF64);
}

AbmilParams load_aggregator(const std::filesystem::path& path) {
  const ckpt::Container c = ckpt::load(path);
  AbmilParams p;
  try {
    p.config = AbmilConfig::read(KvText::parse(c.config));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("aggregator checkpoint config: ") + e.what(), 0);
  }
  const auto shapes = abmil_shapes(p.config);
  if (c.tensors.size() != shapes.size()) throw FormatError("aggregator checkpoint has unexpected tensors", 0);
  for (const auto& [name, shape] : shapes) {
    const Tensor* t = c.find(name);
    if (!t || t->shape() != shape) throw FormatError("aggregator tensor '" + name + "' missing or misshapen", 0);
    const bool weight = name.compare(name.size() - 2, 2, ".w") == 0;
    p.tensors.emplace(name, num::Parameter(name, *t, weight));
  }
  return p;
}

Tensor embed_slides(const AbmilParams& params, const std::vector<SlidePair>& pairs) {
  Tensor out = Tensor::matrix(pairs.size(), params.config.slide_dim);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const Tensor s = abmil_forward(params, pairs[i].tiles).slide;
    std::copy(s.data().begin(), s.data().end(), out.row_span(i).begin());
  });
  return out;
}

Tensor meanpool_slides(const std::vector<SlidePair>& pairs) {
  if (pairs.empty()) throw EmptyInputError("meanpool: no slides");
  Tensor out = Tensor::matrix(pairs.size(), pairs.front().tiles.cols());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Tensor s = meanpool_slide(pairs[i].tiles);
    if (s.cols() != out.cols()) throw ShapeError("meanpool: slides differ in tile width");
    std::copy(s.data().begin(), s.data().end(), out.row_span(i).begin());
  }
  return out;
}

eval::EvalReport slide_probe(const Tensor& features, const std::vector<SlidePair>& pairs,
                             const std::vector<eval::Split>& split, const eval::LinearProbeConfig& cfg) {
  eval::ProbeDataset ds;
  ds.features = features;
  for (const auto& p : pairs) ds.labels.push_back(p.label);
  ds.split = split;
  eval::EvalReport r = eval::linear_probe(ds, cfg);
  r.task = "slide";
  return r;
}

}  // namespace ticon::agg
