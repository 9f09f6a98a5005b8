// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/train/ofmm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ticon/errors.hpp"
#include "ticon/model/checkpoint.hpp"
#include "ticon/model/ticon.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/parallel.hpp"
#include "ticon/rng.hpp"

namespace ticon::train {

using model::GridPos;
using model::TiconParams;
using model::TokenLayout;
using num::Tape;
using num::Tensor;
using num::Var;
namespace ops = num::ops;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string iter_key(const char* prefix, std::int64_t iter) { return std::string(prefix) + std::to_string(iter); }

TiconParams& unconst(const TiconParams& p) { return const_cast<TiconParams&>(p); }

const synth::EmbeddingGrid& grid_of(const GridSet& set, const std::string& id) {
  auto it = set.find(id);
  if (it == set.end()) throw RegistryError("no grid for encoder '" + id + "'");
  return it->second;
}

std::vector<MaskPlan> plans_for(std::span<const GridSet* const> items, const std::string& input, double m_r,
                                double p_r, Rng& rng) {
  std::vector<MaskPlan> plans;
  plans.reserve(items.size());
  for (const GridSet* item : items) {
    const synth::EmbeddingGrid& g = grid_of(*item, input);
    plans.push_back(make_mask_plan(g.validity, g.rows, g.cols, m_r, p_r, rng.next_u64()));
  }
  return plans;
}

std::vector<std::size_t> draw_batch(std::size_t n, std::size_t b, Rng& rng) {
  if (n >= b) return rng.sample_without_replacement(n, b);
  std::vector<std::size_t> out(b);
  for (auto& i : out) i = rng.below(n);
  return out;
}

// Keeps the lines of a JSONL file whose "iter" is below `limit`.
void truncate_jsonl(const std::filesystem::path& path, std::int64_t limit) {
  std::ifstream in(path);
  std::string kept, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (nlohmann::json::parse(line).at("iter").get<std::int64_t>() < limit) kept += line + "\n";
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::int64_t iter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt-%06lld.tck", static_cast<long long>(iter));
  return dir / buf;
}

}  // namespace

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kOmniMulti:
      return "omni-multi";
    case Mode::kOmniSingle:
      return "omni-single";
    case Mode::kIndividual:
      return "individual";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "omni-multi") return Mode::kOmniMulti;
  if (s == "omni-single") return Mode::kOmniSingle;
  if (s == "individual") return Mode::kIndividual;
  throw ConfigError("unknown training mode '" + s + "' (expected omni-multi, omni-single or individual)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (window < 2) throw ConfigError("train: window must be at least 2");
  if (!(m_r > 0.0 && m_r < 1.0)) throw ConfigError("train: m_r must lie in (0,1)");
  if (!(p_r > 0.0 && p_r <= m_r)) throw ConfigError("train: p_r must lie in (0, m_r]");
  if (inputs.empty()) throw ConfigError("train: no input encoders");
  if (mode == Mode::kOmniMulti && targets.empty()) throw ConfigError("train: no target encoders");
  if (mode == Mode::kIndividual && (inputs.size() != 1 || targets != inputs)) {
    throw ConfigError("train: individual mode needs exactly one input encoder and targets = {input}");
  }
  if (eval_interval <= 0 || checkpoint_interval <= 0) throw ConfigError("train: intervals must be positive");
  sched.validate();
}

std::vector<std::string> TrainConfig::targets_for(const std::string& input) const {
  if (mode == Mode::kOmniMulti) return targets;
  return {input};
}

void TrainConfig::write(KvText& kv, const std::string& s) const {
  kv.set(s + ".mode", mode_name(mode));
  kv.set(s + ".inputs", join(inputs));
  kv.set(s + ".targets", join(targets));
  kv.set(s + ".batch_size", static_cast<std::uint64_t>(batch_size));
  kv.set(s + ".window", static_cast<std::uint64_t>(window));
  kv.set(s + ".base_lr", sched.base_lr);
  kv.set(s + ".warmup_iters", static_cast<std::uint64_t>(sched.warmup_iters));
  kv.set(s + ".total_iters", static_cast<std::uint64_t>(sched.total_iters));
  kv.set(s + ".lr_floor_fraction", sched.floor_fraction);
  kv.set(s + ".m_r", m_r);
  kv.set(s + ".p_r", p_r);
  kv.set(s + ".beta1", hyper.beta1);
  kv.set(s + ".beta2", hyper.beta2);
  kv.set(s + ".weight_decay", hyper.weight_decay);
  kv.set(s + ".eps", hyper.eps);
  kv.set(s + ".seed", seed);
  kv.set(s + ".eval_interval", static_cast<std::uint64_t>(eval_interval));
  kv.set(s + ".checkpoint_interval", static_cast<std::uint64_t>(checkpoint_interval));
}

TrainConfig TrainConfig::read(const KvText& kv, const std::string& s) {
  TrainConfig c;
  c.mode = parse_mode(kv.get_or(s + ".mode", mode_name(c.mode)));
  c.inputs = split(kv.get_or(s + ".inputs", ""));
  c.targets = split(kv.get_or(s + ".targets", ""));
  c.batch_size = kv.get_u64_or(s + ".batch_size", c.batch_size);
  c.window = kv.get_u64_or(s + ".window", c.window);
  c.sched.base_lr = kv.get_double_or(s + ".base_lr", c.sched.base_lr);
  c.sched.warmup_iters = static_cast<std::int64_t>(kv.get_u64_or(s + ".warmup_iters", c.sched.warmup_iters));
  c.sched.total_iters = static_cast<std::int64_t>(kv.get_u64_or(s + ".total_iters", c.sched.total_iters));
  c.sched.floor_fraction = kv.get_double_or(s + ".lr_floor_fraction", c.sched.floor_fraction);
  c.m_r = kv.get_double_or(s + ".m_r", c.m_r);
  c.p_r = kv.get_double_or(s + ".p_r", c.p_r);
  c.hyper.beta1 = kv.get_double_or(s + ".beta1", c.hyper.beta1);
  c.hyper.beta2 = kv.get_double_or(s + ".beta2", c.hyper.beta2);
  c.hyper.weight_decay = kv.get_double_or(s + ".weight_decay", c.hyper.weight_decay);
  c.hyper.eps = kv.get_double_or(s + ".eps", c.hyper.eps);
  c.seed = kv.get_u64_or(s + ".seed", c.seed);
  c.eval_interval = static_cast<std::int64_t>(kv.get_u64_or(s + ".eval_interval", c.eval_interval));
  c.checkpoint_interval =
      static_cast<std::int64_t>(kv.get_u64_or(s + ".checkpoint_interval", c.checkpoint_interval));
  c.validate();
  return c;
}

TrainConfig desk_train_config(const synth::EncoderRegistry& registry, Mode mode) {
  TrainConfig c;
  c.mode = mode;
  c.inputs = registry.pretraining_ids();
  c.targets = c.inputs;
  if (mode == Mode::kIndividual) {
    c.inputs.resize(1);
    c.targets = c.inputs;
  }
  return c;
}

model::ModelConfig model_config_for(const TrainConfig& cfg, const synth::EncoderRegistry& registry,
                                    const model::ModelConfig& base) {
  model::ModelConfig m = base;
  m.inputs.clear();
  m.targets.clear();
  std::vector<std::string> targets;
  for (const auto& id : cfg.inputs) {
    m.inputs.push_back({id, registry.dim(id)});
    for (const auto& t : cfg.targets_for(id))
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
  }
  if (cfg.mode == Mode::kOmniMulti) targets = cfg.targets;
  for (const auto& id : targets) m.targets.push_back({id, registry.dim(id)});
  m.validate();
  return m;
}

double cosine_loss(const Tensor& y, const Tensor& target) {
  if (y.shape() != target.shape() || y.rank() != 2) throw ShapeError("cosine_loss: operand shapes differ");
  if (y.rows() == 0) throw EmptyInputError("cosine_loss: no rows");
  double acc = 0.0;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double dot = 0.0, ny = 0.0, nt = 0.0;
    for (std::size_t k = 0; k < y.cols(); ++k) {
      dot += y(r, k) * target(r, k);
      ny += y(r, k) * y(r, k);
      nt += target(r, k) * target(r, k);
    }
    if (!(ny > 0.0) || !(nt > 0.0)) throw NumericalError("cosine_loss: zero-norm row " + std::to_string(r));
    acc += 1.0 - dot / (std::sqrt(ny) * std::sqrt(nt));
  }
  return acc / static_cast<double>(y.rows());
}

PackedLoss packed_ofmm_loss(Tape& tape, TiconParams& params, const std::string& input_id,
                            std::span<const GridSet* const> items, std::span<const MaskPlan> plans,
                            const std::vector<std::string>& targets) {
  if (items.empty()) throw EmptyInputError("ofmm loss: empty batch");
  if (items.size() != plans.size()) throw ShapeError("ofmm loss: one mask plan per item required");
  if (targets.empty()) throw ConfigError("ofmm loss: no targets");
  const std::size_t d_in = params.config.input_dim(input_id);
  for (const auto& t : targets) params.config.target_dim(t);

  TokenLayout vis, pred;
  std::size_t n_vis = 0;
  for (const auto& p : plans) n_vis += p.visible.size();
  Tensor x = Tensor::matrix(n_vis, d_in);
  std::vector<double> weights;
  std::size_t row = 0;
  for (std::size_t b = 0; b < items.size(); ++b) {
    check_aligned(*items[b]);
    const synth::EmbeddingGrid& g = grid_of(*items[b], input_id);
    if (g.dim != d_in) throw ShapeError("ofmm loss: grid of '" + input_id + "' has the wrong width");
    for (const GridPos& p : plans[b].visible) {
      const auto e = g.at(static_cast<std::size_t>(p.row), static_cast<std::size_t>(p.col));
      std::copy(e.begin(), e.end(), x.row_span(row++).begin());
      vis.pos.push_back(p);
      vis.group.push_back(static_cast<std::uint32_t>(b));
    }
    const double w = 1.0 / (static_cast<double>(items.size()) * static_cast<double>(plans[b].predicted.size()));
    for (const GridPos& p : plans[b].predicted) {
      pred.pos.push_back(p);
      pred.group.push_back(static_cast<std::uint32_t>(b));
      weights.push_back(w);
    }
  }
  Tensor wcol = Tensor::matrix(weights.size(), 1);
  for (std::size_t i = 0; i < weights.size(); ++i) wcol(i, 0) = weights[i];

  model::TiconNet net(tape, params);
  Var ctx = net.encode(input_id, tape.constant(std::move(x)), vis);
  auto ys = net.decode(ctx, vis, pred, targets);
  const Var one = tape.constant(Tensor::scalar(1.0));

  PackedLoss out;
  for (const auto& id : targets) {
    const std::size_t d = params.config.target_dim(id);
    Tensor t = Tensor::matrix(pred.size(), d);
    std::size_t r = 0;
    for (std::size_t b = 0; b < items.size(); ++b) {
      const synth::EmbeddingGrid& g = grid_of(*items[b], id);
      if (g.dim != d) throw ShapeError("ofmm loss: grid of '" + id + "' has the wrong width");
      for (const GridPos& p : plans[b].predicted) {
        const auto e = g.at(static_cast<std::size_t>(p.row), static_cast<std::size_t>(p.col));
        std::copy(e.begin(), e.end(), t.row_span(r++).begin());
      }
    }
    Var cos = ops::cosine_rows(ys.at(id), tape.constant(std::move(t)));
    Var l = ops::sub(one, ops::sum(ops::mul_const(cos, wcol)));
    out.per_target.emplace(id, l);
    out.total = out.per_target.size() == 1 ? l : ops::add(out.total, l);
  }
  return out;
}

LossBreakdown ofmm_loss(const TiconParams& params, const std::string& input_id, const GridSet& grids,
                        const MaskPlan& plan, const std::vector<std::string>& targets) {
  Tape tape(false);
  const GridSet* item = &grids;
  const PackedLoss l =
      packed_ofmm_loss(tape, unconst(params), input_id, std::span(&item, 1), std::span(&plan, 1), targets);
  LossBreakdown out;
  out.total = l.total.value().item();
  for (const auto& [id, v] : l.per_target) out.per_target.emplace(id, v.value().item());
  return out;
}

std::string StepMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["iter"] = iter;
  j["lr"] = lr;
  j["input_encoder"] = input_encoder;
  j["loss_total"] = loss_total;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [id, v] : loss_per_target) per[id] = v;
  j["loss_per_target"] = per;
  j["wallclock_ms"] = wallclock_ms;
  return j.dump();
}

std::string EvalResult::to_json() const {
  nlohmann::ordered_json j;
  j["iter"] = iter;
  j["heldout_total"] = total;
  nlohmann::ordered_json pw = nlohmann::ordered_json::object();
  for (const auto& [in, row] : pairwise) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (const auto& [t, v] : row) r[t] = v;
    pw[in] = r;
  }
  j["pairwise"] = pw;
  return j.dump();
}

std::string sample_input(const TrainConfig& cfg, std::int64_t iter) {
  if (cfg.inputs.size() == 1) return cfg.inputs.front();
  Rng rng = Rng::stream(cfg.seed, iter_key("input/", iter));
  return cfg.inputs[rng.below(cfg.inputs.size())];
}

StepMetrics train_step(TrainState& state, std::span<const GridSet* const> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw EmptyInputError("train_step: empty batch");
  const auto t0 = std::chrono::steady_clock::now();
  StepMetrics m;
  m.iter = state.iter;
  m.input_encoder = sample_input(cfg, state.iter);
  m.lr = num::lr_at(state.iter, cfg.sched);
  const auto targets = cfg.targets_for(m.input_encoder);
  Rng rng = Rng::stream(cfg.seed, iter_key("masks/", state.iter));
  const auto plans = plans_for(batch, m.input_encoder, cfg.m_r, cfg.p_r, rng);

  state.params.zero_grad();
  Tape tape(true);
  const PackedLoss loss = packed_ofmm_loss(tape, state.params, m.input_encoder, batch, plans, targets);
  tape.backward(loss.total);
  const auto trainable = state.params.trainable();
  num::adamw_step(trainable, state.opt, m.lr, cfg.hyper);
  ++state.iter;

  m.loss_total = loss.total.value().item();
  for (const auto& [id, v] : loss.per_target) {
    const double x = v.value().item();
    m.loss_per_target.emplace(id, x);
    auto it = state.loss_ema.find(id);
    if (it == state.loss_ema.end()) {
      state.loss_ema.emplace(id, x);
    } else {
      it->second = 0.98 * it->second + 0.02 * x;
    }
  }
  m.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

EvalResult evaluate(const TiconParams& params, const TrainConfig& cfg, std::span<const GridSet> items,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& targets,
                    std::uint64_t plan_seed) {
  if (items.empty()) throw EmptyInputError("evaluate: no held-out items");
  std::vector<const GridSet*> ptrs;
  std::vector<MaskPlan> plans;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ptrs.push_back(&items[i]);
    const synth::EmbeddingGrid& g = items[i].begin()->second;
    plans.push_back(make_mask_plan(g.validity, g.rows, g.cols, cfg.m_r, cfg.p_r,
                                   stream_seed(plan_seed, "eval/" + std::to_string(i))));
  }
  constexpr std::size_t kChunk = 64;
  EvalResult out;
  double total = 0.0;
  const std::size_t n_chunks = (ptrs.size() + kChunk - 1) / kChunk;
  for (const auto& in : inputs) {
    auto& row = out.pairwise[in];
    std::vector<std::map<std::string, double>> parts(n_chunks);
    parallel_for(n_chunks, [&](std::size_t c) {
      const std::size_t start = c * kChunk, n = std::min(kChunk, ptrs.size() - start);
      Tape tape(false);
      const PackedLoss l = packed_ofmm_loss(tape, unconst(params), in, std::span(ptrs).subspan(start, n),
                                            std::span(plans).subspan(start, n), targets);
      const double frac = static_cast<double>(n) / static_cast<double>(ptrs.size());
      for (const auto& [id, v] : l.per_target) parts[c][id] = frac * v.value().item();
    });
    for (const auto& part : parts)
      for (const auto& [id, v] : part) row[id] += v;
    for (const auto& id : cfg.targets_for(in))
      if (row.count(id)) total += row.at(id);
  }
  out.total = total / static_cast<double>(inputs.size());
  return out;
}

void save_train_state(const TrainState& state, const TrainConfig& cfg, const std::string& registry_digest,
                      const std::filesystem::path& path) {
  KvText meta;
  cfg.write(meta);
  meta.set("state.iter", static_cast<std::uint64_t>(state.iter));
  meta.set("state.adam_steps", state.opt.step_count);
  meta.set("state.registry_digest", registry_digest);
  for (const auto& [id, v] : state.loss_ema) meta.set("state.ema." + id, v);
  ckpt::Container c = model::to_container(state.params, meta);
  const auto names = [&] {
    std::vector<std::string> n;
    for (const auto& [name, p] : state.params.tensors)
      if (p.trainable) n.push_back(name);
    return n;
  }();
  if (!state.opt.first_moment.empty()) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      c.tensors.push_back({"opt.m/" + names[i], state.opt.first_moment.at(i)});
      c.tensors.push_back({"opt.v/" + names[i], state.opt.second_moment.at(i)});
    }
  }
  ckpt::save(c, path, ckpt::DType::kF64);
}

TrainState load_train_state(const std::filesystem::path& path, TrainConfig* cfg_out) {
  const ckpt::Container c = ckpt::load(path);
  const KvText kv = KvText::parse(c.config);
  TrainState s;
  s.params = model::params_from_container(c);
  s.iter = static_cast<std::int64_t>(kv.get_u64("state.iter"));
  s.opt.step_count = kv.get_u64("state.adam_steps");
  for (const auto& id : kv.keys_under("state.ema")) s.loss_ema.emplace(id, kv.get_double("state.ema." + id));
  if (s.opt.step_count > 0) {
    for (const auto& [name, p] : s.params.tensors) {
      const Tensor* m = c.find("opt.m/" + name);
      const Tensor* v = c.find("opt.v/" + name);
      if (!m || !v) throw FormatError("training checkpoint lacks optimizer moments for '" + name + "'", 0);
      s.opt.first_moment.push_back(*m);
      s.opt.second_moment.push_back(*v);
    }
  }
  if (cfg_out) *cfg_out = TrainConfig::read(kv);
  return s;
}

PretrainResult pretrain(const Corpus& train, const Corpus& heldout, const TrainConfig& cfg,
                        const synth::EncoderRegistry& registry, const PretrainOptions& opts) {
  cfg.validate();
  std::set<std::string> needed(cfg.inputs.begin(), cfg.inputs.end());
  needed.insert(cfg.targets.begin(), cfg.targets.end());
  for (const Corpus* c : {&train, &heldout}) {
    if (c->candidates.empty()) throw EmptyInputError("pretrain: corpus has no candidate windows");
    if (c->registry_digest != registry.digest()) {
      throw RegistryError("pretrain: corpus was encoded with a different encoder registry");
    }
    for (const auto& id : needed)
      if (!c->has_encoder(id)) throw RegistryError("pretrain: corpus lacks grids for encoder '" + id + "'");
    for (const auto& cand : c->candidates)
      if (cand.k != cfg.window) throw ConfigError("pretrain: corpus windows do not match train.window");
  }

  PretrainResult res;
  TrainState& state = res.state;
  std::filesystem::create_directories(opts.out_dir);
  const auto metrics_path = opts.out_dir / "metrics.jsonl";
  const auto eval_path = opts.out_dir / "eval.jsonl";
  if (opts.resume) {
    TrainConfig stored;
    state = load_train_state(*opts.resume, &stored);
    if (!(stored == cfg)) throw ConfigError("pretrain: resume checkpoint was written with a different config");
    truncate_jsonl(metrics_path, state.iter);
    truncate_jsonl(eval_path, state.iter);
  } else {
    state.params = model::init_params(model_config_for(cfg, registry, opts.base_model), opts.init_seed);
    std::ofstream(metrics_path, std::ios::trunc);
    std::ofstream(eval_path, std::ios::trunc);
  }

  std::vector<GridSet> windows;
  windows.reserve(train.candidates.size());
  for (std::size_t i = 0; i < train.candidates.size(); ++i) windows.push_back(train.window(i));
  std::vector<GridSet> held;
  for (std::size_t i = 0; i < std::min(opts.eval_items, heldout.candidates.size()); ++i)
    held.push_back(heldout.window(i));

  std::vector<std::string> eval_targets;
  for (const auto& t : state.params.config.targets) eval_targets.push_back(t.id);
  const std::uint64_t plan_seed = stream_seed(cfg.seed, "heldout");
  std::ofstream metrics(metrics_path, std::ios::app);
  std::ofstream evals(eval_path, std::ios::app);
  auto run_eval = [&] {
    EvalResult e = evaluate(state.params, cfg, held, cfg.inputs, eval_targets, plan_seed);
    e.iter = state.iter;
    evals << e.to_json() << "\n" << std::flush;
    res.evals.push_back(std::move(e));
  };

  const std::int64_t end = opts.stop_at >= 0 ? std::min(opts.stop_at, cfg.sched.total_iters) : cfg.sched.total_iters;
  if (state.iter % cfg.eval_interval == 0 && state.iter < end) run_eval();
  std::vector<const GridSet*> batch(cfg.batch_size);
  while (state.iter < end) {
    Rng rng = Rng::stream(cfg.seed, iter_key("batch/", state.iter));
    const auto idx = draw_batch(windows.size(), cfg.batch_size, rng);
    for (std::size_t b = 0; b < idx.size(); ++b) batch[b] = &windows[idx[b]];
    StepMetrics m = train_step(state, batch, cfg);
    if (opts.deterministic) m.wallclock_ms = 0.0;
    metrics << m.to_json() << "\n";
    if (opts.on_step) opts.on_step(m);
    if (state.iter % cfg.eval_interval == 0 || state.iter == cfg.sched.total_iters) run_eval();
    if (state.iter % cfg.checkpoint_interval == 0 && state.iter != end) {
      save_train_state(state, cfg, registry.digest(), checkpoint_path(opts.out_dir, state.iter));
    }
  }
  metrics.flush();
  res.checkpoint = checkpoint_path(opts.out_dir, state.iter);
  save_train_state(state, cfg, registry.digest(), res.checkpoint);
  return res;
}

TiconParams attach_encoder(const TiconParams& base, const std::string& unseen_id,
                           const synth::EncoderRegistry& registry, std::uint64_t seed) {
  if (base.config.has_input(unseen_id) || base.config.has_target(unseen_id)) {
    throw RegistryError("adapt: encoder '" + unseen_id + "' is already part of the model");
  }
  const model::EncoderDim e{unseen_id, registry.dim(unseen_id)};
  TiconParams p = base;
  model::add_input_projector(p, e, stream_seed(seed, "rho"));
  model::add_output_head(p, e, stream_seed(seed, "psi"));
  return p;
}

TiconParams adapt_unseen(const TiconParams& base, const std::string& unseen_id,
                         const synth::EncoderRegistry& registry, const Corpus& corpus, const AdaptConfig& cfg,
                         std::vector<StepMetrics>* log) {
  TiconParams p = attach_encoder(base, unseen_id, registry, cfg.seed);
  if (!corpus.has_encoder(unseen_id)) throw RegistryError("adapt: corpus lacks grids for '" + unseen_id + "'");
  for (const auto& cand : corpus.candidates)
    if (cand.k != cfg.window) throw ConfigError("adapt: corpus windows do not match the adaptation window");

  TrainState state;
  state.params = std::move(p);
  for (auto& [name, t] : state.params.tensors) t.trainable = !base.contains(name);

  TrainConfig tc;
  tc.mode = Mode::kIndividual;
  tc.inputs = {unseen_id};
  tc.targets = {unseen_id};
  tc.batch_size = cfg.batch_size;
  tc.window = cfg.window;
  tc.sched = {cfg.base_lr, cfg.warmup, cfg.iters, 0.1};
  tc.m_r = cfg.m_r;
  tc.p_r = cfg.p_r;
  tc.seed = cfg.seed;
  tc.validate();

  std::vector<GridSet> windows;
  for (std::size_t i = 0; i < corpus.candidates.size(); ++i) {
    GridSet w = corpus.window(i);
    GridSet own;
    own.emplace(unseen_id, std::move(w.at(unseen_id)));
    windows.push_back(std::move(own));
  }
  std::vector<const GridSet*> batch(cfg.batch_size);
  while (state.iter < cfg.iters) {
    Rng rng = Rng::stream(cfg.seed, iter_key("adapt/batch/", state.iter));
    const auto idx = draw_batch(windows.size(), cfg.batch_size, rng);
    for (std::size_t b = 0; b < idx.size(); ++b) batch[b] = &windows[idx[b]];
    StepMetrics m = train_step(state, batch, tc);
    if (log) log->push_back(std::move(m));
  }
  for (auto& [name, t] : state.params.tensors) t.trainable = true;
  return std::move(state.params);
}

}  // namespace ticon::train
