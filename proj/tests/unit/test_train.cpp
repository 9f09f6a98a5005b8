// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ticon/errors.hpp"
#include "ticon/model/ticon.hpp"
#include "ticon/numerics/gradcheck.hpp"
#include "ticon/rng.hpp"
#include "ticon/train/corpus.hpp"
#include "ticon/train/mask.hpp"
#include "ticon/train/ofmm.hpp"

using namespace ticon;
using namespace ticon::train;
using model::GridPos;

namespace {

const synth::EncoderRegistry& registry() {
  static const synth::EncoderRegistry reg = synth::EncoderRegistry::desk_default();
  return reg;
}

std::vector<std::uint8_t> all_valid(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

std::size_t flat(GridPos p, std::size_t cols) { return static_cast<std::size_t>(p.row) * cols + p.col; }

// Aligned window of every pretraining encoder (plus the unseen ones) cut from
// one synthetic slide.
GridSet slide_window(std::uint64_t seed, std::size_t row, std::size_t col, std::size_t k) {
  const synth::SyntheticSlide s = synth::generate_slide(seed, synth::SynthConfig{});
  GridSet out;
  for (const auto& id : registry().ids())
    out.emplace(id, synth::crop(synth::encode_tiles(s, registry(), id), row, col, k, k));
  return out;
}

Corpus small_corpus(std::uint64_t base, std::size_t slides, const std::vector<std::string>& ids) {
  const auto seeds = seed_range(base, slides);
  return build_corpus(synth::SynthConfig{}, registry(), ids, seeds, synth::CandidateConfig{4, 0.55, 8}, base + 1);
}

std::vector<std::string> all_ids() { return registry().ids(); }

TrainConfig tiny_config(Mode mode, std::int64_t iters) {
  TrainConfig cfg = desk_train_config(registry(), mode);
  if (mode == Mode::kIndividual) {
    cfg.inputs = {"enc-a"};
    cfg.targets = {"enc-a"};
  }
  cfg.batch_size = 4;
  cfg.sched = {1e-3, 2, iters, 0.1};
  cfg.eval_interval = 3;
  cfg.checkpoint_interval = 100;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::path(::testing::TempDir()) / ("ticon_train_" + name);
  std::filesystem::remove_all(p);
  return p;
}

bool same_bytes(const num::Tensor& a, const num::Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(MaskPlan, DeskCounts) {
  const MaskPlan p = make_mask_plan(all_valid(16), 4, 4, 0.75, 0.25, 9);
  EXPECT_EQ(p.visible.size(), 4u);
  EXPECT_EQ(p.masked.size(), 12u);
  EXPECT_EQ(p.predicted.size(), 4u);
}

TEST(MaskPlan, TwoValidPositionsClamp) {
  std::vector<std::uint8_t> v{0, 1, 0, 1};
  const MaskPlan p = make_mask_plan(v, 2, 2, 0.75, 0.25, 3);
  EXPECT_EQ(p.masked.size(), 1u);
  EXPECT_EQ(p.visible.size(), 1u);
  EXPECT_EQ(p.predicted.size(), 1u);
}

TEST(MaskPlan, MaskFrequencyIsUniform) {
  std::vector<int> hits(16, 0);
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    const MaskPlan p = make_mask_plan(all_valid(16), 4, 4, 0.75, 0.25, stream_seed(77, std::to_string(s)));
    for (const auto& q : p.masked) ++hits[flat(q, 4)];
  }
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.75, 0.02);
}

TEST(MaskPlan, PartitionLawsOverRandomValidity) {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t rows = 1 + rng.below(6), cols = 2 + rng.below(6);
    std::vector<std::uint8_t> v(rows * cols);
    for (auto& x : v) x = rng.bernoulli(0.7);
    std::size_t n = std::count(v.begin(), v.end(), 1);
    if (n < 2) {
      v[0] = v[1] = 1;
      n = std::count(v.begin(), v.end(), 1);
    }
    const double m_r = rng.uniform(0.05, 0.95);
    const double p_r = rng.uniform(0.01, m_r);
    const MaskPlan p = make_mask_plan(v, rows, cols, m_r, p_r, rng.next_u64());

    std::set<std::size_t> vis, msk;
    for (const auto& q : p.visible) vis.insert(flat(q, cols));
    for (const auto& q : p.masked) msk.insert(flat(q, cols));
    ASSERT_EQ(vis.size(), p.visible.size());
    ASSERT_EQ(msk.size(), p.masked.size());
    ASSERT_GE(vis.size(), 1u);
    ASSERT_GE(msk.size(), 1u);
    ASSERT_EQ(vis.size() + msk.size(), n);
    for (std::size_t i : vis) {
      ASSERT_TRUE(v[i]);
      ASSERT_EQ(msk.count(i), 0u);
    }
    for (std::size_t i : msk) ASSERT_TRUE(v[i]);
    for (const auto& q : p.predicted) ASSERT_EQ(msk.count(flat(q, cols)), 1u);
    ASSERT_TRUE(std::is_sorted(p.visible.begin(), p.visible.end(),
                               [&](GridPos a, GridPos b) { return flat(a, cols) < flat(b, cols); }));
  }
}

TEST(MaskPlan, DeterministicAndErrors) {
  const MaskPlan a = make_mask_plan(all_valid(16), 4, 4, 0.75, 0.25, 11);
  const MaskPlan b = make_mask_plan(all_valid(16), 4, 4, 0.75, 0.25, 11);
  EXPECT_EQ(a.masked, b.masked);
  EXPECT_EQ(a.predicted, b.predicted);
  std::vector<std::uint8_t> one{0, 1, 0, 0};
  EXPECT_THROW(make_mask_plan(one, 2, 2, 0.75, 0.25, 1), DegenerateGridError);
  EXPECT_THROW(make_mask_plan(all_valid(16), 4, 4, 1.0, 0.25, 1), ConfigError);
  EXPECT_THROW(make_mask_plan(all_valid(16), 4, 4, 0.5, 0.6, 1), ConfigError);
  EXPECT_THROW(make_mask_plan(all_valid(16), 4, 4, 0.5, 0.0, 1), ConfigError);
}

TEST(CosineLoss, Examples) {
  const num::Tensor y = num::Tensor::from_rows({{1, 2, 3}, {-1, 0, 4}});
  num::Tensor neg = y;
  for (auto& v : neg.data()) v = -v;
  EXPECT_DOUBLE_EQ(cosine_loss(y, y), 0.0);
  EXPECT_DOUBLE_EQ(cosine_loss(y, neg), 2.0);
  EXPECT_DOUBLE_EQ(cosine_loss(num::Tensor::from_rows({{1, 0}, {0, 3}}), num::Tensor::from_rows({{0, 2}, {5, 0}})),
                   1.0);
  EXPECT_THROW(cosine_loss(y, num::Tensor::from_rows({{1, 2, 3}, {0, 0, 0}})), NumericalError);
  EXPECT_THROW(cosine_loss(y, num::Tensor::matrix(2, 2, 1.0)), ShapeError);
}

TEST(CosineLoss, ScaleInvariance) {
  Rng rng(3);
  num::Tensor y = num::Tensor::matrix(5, 7), t = num::Tensor::matrix(5, 7);
  for (auto& v : y.data()) v = rng.normal();
  for (auto& v : t.data()) v = rng.normal();
  num::Tensor t2 = t;
  for (auto& v : t2.data()) v *= 37.5;
  EXPECT_NEAR(cosine_loss(y, t), cosine_loss(y, t2), 1e-14);
}

TEST(OfmmLoss, DecomposesAndMatchesStraightLineComposition) {
  const GridSet grids = slide_window(21, 3, 4, 2);
  const model::TiconParams params = model::init_params(model::ModelConfig::desk_default(registry()), 4);
  const std::vector<std::string> targets{"enc-a", "enc-b", "enc-c"};
  const MaskPlan plan = make_mask_plan(grids.at("enc-b").validity, 2, 2, 0.75, 0.25, 8);
  const LossBreakdown l = ofmm_loss(params, "enc-b", grids, plan, targets);

  double sum = 0.0;
  for (const auto& [id, v] : l.per_target) sum += v;
  EXPECT_NEAR(l.total, sum, 1e-12);

  // Straight-line: encode visible, decode at p, cosine against the targets.
  const auto& in = grids.at("enc-b");
  num::Tensor x = num::Tensor::matrix(plan.visible.size(), in.dim);
  for (std::size_t i = 0; i < plan.visible.size(); ++i) {
    const auto e = in.at(plan.visible[i].row, plan.visible[i].col);
    std::copy(e.begin(), e.end(), x.row_span(i).begin());
  }
  const model::ContextOutput ctx = model::encode(params, "enc-b", x, plan.visible);
  const auto ys = model::decode_predict(params, ctx, plan.predicted, targets);
  double total = 0.0;
  for (const auto& id : targets) {
    const auto& g = grids.at(id);
    num::Tensor t = num::Tensor::matrix(plan.predicted.size(), g.dim);
    for (std::size_t i = 0; i < plan.predicted.size(); ++i) {
      const auto e = g.at(plan.predicted[i].row, plan.predicted[i].col);
      std::copy(e.begin(), e.end(), t.row_span(i).begin());
    }
    const double li = cosine_loss(ys.at(id), t);
    EXPECT_NEAR(l.per_target.at(id), li, 1e-12) << id;
    total += li;
  }
  EXPECT_NEAR(l.total, total, 1e-12);
}

TEST(OfmmLoss, RandomInitOnRandomTargetsIsNearOne) {
  model::ModelConfig cfg = model::ModelConfig::desk_default(registry());
  cfg.targets = {{"t0", 48}, {"t1", 48}, {"t2", 48}};
  const std::vector<std::string> targets{"t0", "t1", "t2"};
  double acc = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    const model::TiconParams params = model::init_params(cfg, 500 + s);
    GridSet g;
    for (const std::string id : {"enc-a", "t0", "t1", "t2"}) {
      auto grid = synth::EmbeddingGrid::zeros(id, 4, 4, 48);
      grid.validity.assign(16, 1);
      for (auto& v : grid.embeddings) v = static_cast<float>(rng.normal());
      g.emplace(id, std::move(grid));
    }
    const MaskPlan plan = make_mask_plan(all_valid(16), 4, 4, 0.75, 0.25, rng.next_u64());
    acc += ofmm_loss(params, "enc-a", g, plan, targets).total / 3.0;
  }
  const double mean = acc / seeds;
  EXPECT_GE(mean, 0.9);
  EXPECT_LE(mean, 1.1);
}

TEST(OfmmLoss, MisalignedGridsThrow) {
  GridSet g = slide_window(3, 0, 0, 4);
  const model::TiconParams params = model::init_params(model::ModelConfig::desk_default(registry()), 1);
  const MaskPlan plan = make_mask_plan(all_valid(16), 4, 4, 0.75, 0.25, 2);
  g.at("enc-c").origin_col += 1;
  EXPECT_THROW(ofmm_loss(params, "enc-a", g, plan, {"enc-a", "enc-b", "enc-c"}), AlignmentError);
  EXPECT_THROW(check_aligned(g), AlignmentError);
}

TEST(OfmmLoss, FullPipelineGradCheck) {
  const GridSet grids = slide_window(8, 5, 5, 2);
  model::TiconParams params = model::init_params(model::ModelConfig::desk_default(registry()), 12);
  // Move off the zero-bias / unit-scale point so every path is exercised.
  Rng rng(4);
  for (auto& [name, p] : params.tensors)
    for (auto& v : p.value.data()) v += 0.05 * rng.normal();
  const std::vector<const GridSet*> items{&grids};
  const std::vector<MaskPlan> plans{make_mask_plan(grids.at("enc-a").validity, 2, 2, 0.75, 0.25, 6)};
  const std::vector<std::string> targets{"enc-a", "enc-b", "enc-c"};
  auto f = [&](num::Tape& tape) {
    return packed_ofmm_loss(tape, params, "enc-a", items, plans, targets).total;
  };
  std::vector<num::Parameter*> ps;
  for (auto& [name, p] : params.tensors)
    if (name.rfind("proj.enc-b", 0) != 0 && name.rfind("proj.enc-c", 0) != 0) ps.push_back(&p);
  EXPECT_LE(num::grad_check_params(f, ps, 1e-5, 6), 1e-4);
}

TEST(TrainStep, ZeroLrLeavesParametersUnchanged) {
  const Corpus c = small_corpus(100, 2, all_ids());
  const TrainConfig cfg = tiny_config(Mode::kOmniMulti, 5);
  TrainState st;
  st.params = model::init_params(model_config_for(cfg, registry(), {}), 3);
  const model::TiconParams before = st.params;
  std::vector<GridSet> w{c.window(0), c.window(1)};
  std::vector<const GridSet*> batch{&w[0], &w[1]};
  const StepMetrics m = train_step(st, batch, cfg);
  EXPECT_EQ(m.iter, 0);
  EXPECT_EQ(m.lr, 0.0);
  EXPECT_EQ(st.iter, 1);
  EXPECT_GT(m.loss_total, 0.0);
  EXPECT_EQ(m.loss_per_target.size(), 3u);
  for (const auto& [name, p] : before.tensors) EXPECT_TRUE(same_bytes(p.value, st.params.at(name).value)) << name;
  const std::string j = m.to_json();
  for (const char* key : {"\"iter\"", "\"lr\"", "\"input_encoder\"", "\"loss_total\"", "\"loss_per_target\"",
                          "\"wallclock_ms\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
}

TEST(TrainStep, DeterministicMetricsSequence) {
  const Corpus c = small_corpus(120, 2, all_ids());
  const TrainConfig cfg = tiny_config(Mode::kOmniMulti, 6);
  auto run = [&] {
    TrainState st;
    st.params = model::init_params(model_config_for(cfg, registry(), {}), 3);
    std::vector<GridSet> w;
    for (std::size_t i = 0; i < 4; ++i) w.push_back(c.window(i));
    std::vector<const GridSet*> batch;
    for (const auto& x : w) batch.push_back(&x);
    std::vector<std::string> out;
    for (int i = 0; i < 4; ++i) {
      StepMetrics m = train_step(st, batch, cfg);
      m.wallclock_ms = 0;
      out.push_back(m.to_json());
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainStep, InputSamplingIsUniform) {
  const TrainConfig cfg = desk_train_config(registry());
  std::map<std::string, int> n;
  for (std::int64_t i = 0; i < 3000; ++i) ++n[sample_input(cfg, i)];
  ASSERT_EQ(n.size(), 3u);
  for (const auto& [id, k] : n) EXPECT_NEAR(k / 3000.0, 1.0 / 3.0, 0.03) << id;
}

TEST(TrainConfig, RoundtripAndValidation) {
  TrainConfig cfg = desk_train_config(registry(), Mode::kOmniSingle);
  cfg.seed = 99;
  KvText kv;
  cfg.write(kv);
  EXPECT_EQ(TrainConfig::read(kv), cfg);
  EXPECT_EQ(parse_mode(mode_name(Mode::kIndividual)), Mode::kIndividual);
  EXPECT_THROW(parse_mode("omni"), ConfigError);

  TrainConfig bad = cfg;
  bad.m_r = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.mode = Mode::kIndividual;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Pretrain, IndividualModeHasOneProjectorAndOneHead) {
  const Corpus tr = small_corpus(200, 2, all_ids()), ho = small_corpus(300, 1, all_ids());
  PretrainOptions o;
  o.out_dir = scratch("individual");
  const PretrainResult r = pretrain(tr, ho, tiny_config(Mode::kIndividual, 2), registry(), o);
  const model::TiconParams p = load_train_state(r.checkpoint).params;
  std::set<std::string> proj, head;
  for (const auto& [name, t] : p.tensors) {
    if (name.rfind("proj.", 0) == 0) proj.insert(name.substr(5, name.find('.', 5) - 5));
    if (name.rfind("head.", 0) == 0) head.insert(name.substr(5, name.find('.', 5) - 5));
  }
  EXPECT_EQ(proj, std::set<std::string>{"enc-a"});
  EXPECT_EQ(head, std::set<std::string>{"enc-a"});
}

TEST(Pretrain, SingleTargetWithOneInputEqualsIndividual) {
  const Corpus tr = small_corpus(210, 2, all_ids()), ho = small_corpus(310, 1, all_ids());
  TrainConfig single = tiny_config(Mode::kOmniSingle, 4);
  single.inputs = {"enc-a"};
  single.targets = {"enc-a"};
  const TrainConfig ind = tiny_config(Mode::kIndividual, 4);
  PretrainOptions a, b;
  a.out_dir = scratch("single");
  b.out_dir = scratch("ind");
  const PretrainResult ra = pretrain(tr, ho, single, registry(), a);
  const PretrainResult rb = pretrain(tr, ho, ind, registry(), b);
  EXPECT_EQ(slurp(a.out_dir / "metrics.jsonl"), slurp(b.out_dir / "metrics.jsonl"));
  EXPECT_TRUE(ra.state.params == rb.state.params);
}

TEST(Pretrain, ResumeIsBitExact) {
  const Corpus tr = small_corpus(220, 2, all_ids()), ho = small_corpus(320, 1, all_ids());
  const TrainConfig cfg = tiny_config(Mode::kOmniMulti, 6);
  PretrainOptions full;
  full.out_dir = scratch("full");
  const PretrainResult whole = pretrain(tr, ho, cfg, registry(), full);

  PretrainOptions part;
  part.out_dir = scratch("part");
  part.stop_at = 4;
  const PretrainResult first = pretrain(tr, ho, cfg, registry(), part);
  EXPECT_EQ(first.state.iter, 4);
  PretrainOptions again = part;
  again.stop_at = -1;
  again.resume = first.checkpoint;
  const PretrainResult rest = pretrain(tr, ho, cfg, registry(), again);

  EXPECT_EQ(slurp(full.out_dir / "metrics.jsonl"), slurp(part.out_dir / "metrics.jsonl"));
  EXPECT_EQ(slurp(full.out_dir / "eval.jsonl"), slurp(part.out_dir / "eval.jsonl"));
  EXPECT_TRUE(whole.state.params == rest.state.params);
  EXPECT_EQ(whole.state.loss_ema, rest.state.loss_ema);

  TrainConfig other = cfg;
  other.seed += 1;
  EXPECT_THROW(pretrain(tr, ho, other, registry(), again), ConfigError);
}

TEST(Pretrain, RegistryMismatchesAreRejected) {
  const Corpus tr = small_corpus(230, 1, {"enc-a", "enc-b"}), ho = small_corpus(330, 1, all_ids());
  PretrainOptions o;
  o.out_dir = scratch("mismatch");
  EXPECT_THROW(pretrain(tr, ho, tiny_config(Mode::kOmniMulti, 2), registry(), o), RegistryError);

  Corpus forged = small_corpus(240, 1, all_ids());
  forged.registry_digest = "00000000";
  EXPECT_THROW(pretrain(forged, ho, tiny_config(Mode::kOmniMulti, 2), registry(), o), RegistryError);
}

TEST(Adapt, FrozenCoreAndLossDrop) {
  const Corpus tr = small_corpus(400, 16, all_ids()), ho = small_corpus(900, 4, all_ids());
  TrainConfig cfg = desk_train_config(registry());
  cfg.batch_size = 16;
  cfg.sched = {1e-3, 20, 150, 0.1};
  cfg.eval_interval = 1000;
  cfg.checkpoint_interval = 1000;
  PretrainOptions o;
  o.out_dir = scratch("adapt_base");
  const model::TiconParams base = pretrain(tr, ho, cfg, registry(), o).state.params;

  AdaptConfig ac;
  ac.iters = 200;
  ac.batch_size = 16;
  const model::TiconParams adapted = adapt_unseen(base, "unseen-d", registry(), tr, ac);
  for (const auto& [name, t] : base.tensors) EXPECT_TRUE(same_bytes(t.value, adapted.at(name).value)) << name;
  EXPECT_TRUE(adapted.contains("proj.unseen-d.fc1.w"));
  EXPECT_TRUE(adapted.contains("head.unseen-d.fc2.w"));

  const model::TiconParams untrained = attach_encoder(base, "unseen-d", registry(), ac.seed);
  std::vector<GridSet> held;
  for (std::size_t i = 0; i < ho.candidates.size(); ++i) held.push_back(ho.window(i));
  TrainConfig ec = cfg;
  ec.mode = Mode::kIndividual;
  ec.inputs = ec.targets = {"unseen-d"};
  const double after = evaluate(adapted, ec, held, {"unseen-d"}, {"unseen-d"}, 5).total;
  const double before = evaluate(untrained, ec, held, {"unseen-d"}, {"unseen-d"}, 5).total;
  EXPECT_LE(after, 0.6 * before) << "adapted " << after << " baseline " << before;

  const auto& g = held.front().at("enc-a");
  const double diff = [&] {
    const num::Tensor a = model::contextualize_valid(base, "enc-a", g);
    const num::Tensor b = model::contextualize_valid(adapted, "enc-a", g);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }();
  EXPECT_LE(diff, 1e-12);

  EXPECT_THROW(adapt_unseen(base, "enc-a", registry(), tr, ac), RegistryError);
  const Corpus lacking = small_corpus(950, 1, {"enc-a"});
  EXPECT_THROW(adapt_unseen(base, "unseen-e", registry(), lacking, ac), RegistryError);
}
