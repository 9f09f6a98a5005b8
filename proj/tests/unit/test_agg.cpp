// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "ticon/agg/abmil.hpp"
#include "ticon/agg/tangle.hpp"
#include "ticon/binio.hpp"
#include "ticon/errors.hpp"
#include "ticon/eval/benchmark.hpp"
#include "ticon/numerics/gradcheck.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/rng.hpp"
#include "ticon/synth/encoder.hpp"

namespace ticon::agg {
namespace {

using num::Tensor;
using Mat = Eigen::MatrixXd;

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

Mat to_eigen(const Tensor& t) {
  Mat m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  return m;
}

AbmilConfig small_config(AttentionKind kind = AttentionKind::kGated) {
  AbmilConfig c;
  c.tile_dim = 6;
  c.gene_dim = 5;
  c.hidden = 8;
  c.attn_dim = 7;
  c.heads = 2;
  c.slide_dim = 4;
  c.attention = kind;
  return c;
}

double max_diff(const Tensor& a, const Tensor& b) { return num::max_abs_diff(a, b); }

// Direct Eigen recomputation of the pooled slide vector.
Mat gelu(const Mat& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
}

Mat affine(const AbmilParams& p, const std::string& prefix, const Mat& x) {
  const Mat w = to_eigen(p.at(prefix + ".w").value);
  Mat y = x * w;
  if (p.tensors.count(prefix + ".b")) y.rowwise() += to_eigen(p.at(prefix + ".b").value).row(0);
  return y;
}

Mat oracle_slide(const AbmilParams& p, const Tensor& tiles, std::vector<std::vector<double>>* attn) {
  const Mat x = to_eigen(tiles);
  const Mat h = affine(p, "pre.2", gelu(affine(p, "pre.1", gelu(affine(p, "pre.0", x)))));
  Mat cat(1, p.config.heads * p.config.hidden);
  for (std::size_t k = 0; k < p.config.heads; ++k) {
    const std::string a = "attn." + std::to_string(k);
    Mat g = affine(p, a + ".V", h).array().tanh().matrix();
    if (p.config.attention == AttentionKind::kGated) {
      const Mat u = affine(p, a + ".U", h);
      g = g.cwiseProduct(u.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
    }
    const Mat s = g * to_eigen(p.at(a + ".w.w").value);
    const double mx = s.maxCoeff();
    Eigen::VectorXd w = (s.array() - mx).exp().matrix().col(0);
    w /= w.sum();
    if (attn) attn->emplace_back(w.data(), w.data() + w.size());
    cat.block(0, k * p.config.hidden, 1, p.config.hidden) = w.transpose() * h;
  }
  return affine(p, "post", cat);
}

TEST(Abmil, MatchesDirectRecomputation) {
  for (AttentionKind kind : {AttentionKind::kGated, AttentionKind::kTanh}) {
    const AbmilParams p = init_abmil(small_config(kind), 3);
    const Tensor tiles = random_matrix(9, 6, 11);
    std::vector<std::vector<double>> attn;
    const Mat expect = oracle_slide(p, tiles, &attn);
    const PoolResult r = abmil_forward(p, tiles);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.slide(0, j), expect(0, j), 1e-12);
    ASSERT_EQ(r.attention.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(r.attention[k][i], attn[k][i], 1e-12);
  }
}

TEST(Abmil, TanhVariantHasNoGate) {
  const AbmilParams p = init_abmil(small_config(AttentionKind::kTanh), 1);
  EXPECT_EQ(p.tensors.count("attn.0.U.w"), 0u);
  EXPECT_EQ(init_abmil(small_config(), 1).tensors.count("attn.0.U.w"), 1u);
}

TEST(Abmil, SingleTileGetsAllAttention) {
  const AbmilParams p = init_abmil(small_config(), 5);
  const Tensor tile = random_matrix(1, 6, 2);
  const PoolResult r = abmil_forward(p, tile);
  for (const auto& a : r.attention) {
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0], 1.0);
  }
  // With one tile each head pools h itself, so the slide vector is post([h, h]).
  const Mat h = affine(p, "pre.2", gelu(affine(p, "pre.1", gelu(affine(p, "pre.0", to_eigen(tile))))));
  Mat cat(1, 16);
  cat << h, h;
  const Mat expect = affine(p, "post", cat);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.slide(0, j), expect(0, j), 1e-12);
}

TEST(Abmil, PermutationAndDuplicationInvariance) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const AbmilParams p = init_abmil(small_config(seed % 2 ? AttentionKind::kGated : AttentionKind::kTanh), seed);
    const std::size_t n = 3 + seed;
    const Tensor tiles = random_matrix(n, 6, 100 + seed);
    const Tensor base = abmil_forward(p, tiles).slide;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    Tensor perm = Tensor::matrix(n, 6), twice = Tensor::matrix(2 * n, 6);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        perm(i, j) = tiles(order[i], j);
        twice(i, j) = twice(n + i, j) = tiles(i, j);
      }
    EXPECT_LE(max_diff(abmil_forward(p, perm).slide, base), 1e-12);
    EXPECT_LE(max_diff(abmil_forward(p, twice).slide, base), 1e-12);
  }
}

TEST(Abmil, AttentionIsPositiveAndNormalized) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const AbmilParams p = init_abmil(small_config(), seed);
    const PoolResult r = abmil_forward(p, random_matrix(1 + seed * 3, 6, seed, 3.0));
    for (const auto& a : r.attention) {
      double s = 0.0;
      for (double v : a) {
        EXPECT_GT(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Abmil, InputErrors) {
  const AbmilParams p = init_abmil(small_config(), 1);
  EXPECT_THROW(abmil_forward(p, Tensor::matrix(0, 6)), EmptyInputError);
  EXPECT_THROW(abmil_forward(p, Tensor::matrix(3, 5)), ShapeError);
  EXPECT_THROW(gene_embed(p, Tensor::matrix(2, 4)), ShapeError);
  AbmilConfig bad = small_config();
  bad.heads = 0;
  EXPECT_THROW(init_abmil(bad, 1), ConfigError);
  EXPECT_THROW(parse_attention("softmax"), ConfigError);
}

TEST(Abmil, GradientCheckOnToySlides) {
  for (AttentionKind kind : {AttentionKind::kGated, AttentionKind::kTanh}) {
    AbmilConfig c = small_config(kind);
    c.tile_dim = 3;
    c.gene_dim = 4;
    c.hidden = 5;
    c.attn_dim = 4;
    c.slide_dim = 3;
    AbmilParams p = init_abmil(c, 9);
    const Tensor a = random_matrix(3, 3, 1), b = random_matrix(3, 3, 2);
    const Tensor genes = random_matrix(2, 4, 3);
    auto f = [&](num::Tape& t) {
      const num::Var sa = abmil_pool(t, p, t.constant(a)).slide;
      const num::Var sb = abmil_pool(t, p, t.constant(b)).slide;
      return tangle_loss(num::ops::concat_rows({sa, sb}), gene_branch(t, p, t.constant(genes)), 0.5);
    };
    const auto params = p.all();
    EXPECT_LE(num::grad_check_params(f, params, 1e-6), 1e-4) << attention_name(kind);

    // Gradient with respect to the tiles themselves.
    auto g = [&](num::Tape& t, num::Var x) { return num::ops::sum(abmil_pool(t, p, x).slide); };
    EXPECT_LE(num::grad_check(g, a), 1e-4);
  }
}

// Reference InfoNCE with explicit log-sum-exp loops.
double oracle_tangle(const Tensor& s, const Tensor& g, double tau) {
  const std::size_t b = s.rows();
  Mat sn = to_eigen(s), gn = to_eigen(g);
  sn.rowwise().normalize();
  gn.rowwise().normalize();
  const Mat l = sn * gn.transpose() / tau;
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double rmax = -INFINITY, cmax = -INFINITY;
    for (std::size_t j = 0; j < b; ++j) {
      rmax = std::max(rmax, l(i, j));
      cmax = std::max(cmax, l(j, i));
    }
    double rs = 0.0, cs = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      rs += std::exp(l(i, j) - rmax);
      cs += std::exp(l(j, i) - cmax);
    }
    total += (rmax + std::log(rs) - l(i, i)) + (cmax + std::log(cs) - l(i, i));
  }
  return total / (2.0 * b);
}

TEST(Tangle, MatchesReferenceAndIsNonNegative) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t b = 2 + seed % 7;
    const Tensor s = random_matrix(b, 5, seed), g = random_matrix(b, 5, 1000 + seed);
    const double tau = 0.05 + 0.1 * (seed % 4);
    const double v = tangle_loss(s, g, tau);
    EXPECT_NEAR(v, oracle_tangle(s, g, tau), 1e-12);
    EXPECT_GE(v, 0.0);
  }
}

TEST(Tangle, AlignedPairsApproachZeroAtLowTemperature) {
  const Tensor s = random_matrix(2, 8, 4);
  double prev = INFINITY;
  for (double tau : {1.0, 0.1, 0.01, 0.001}) {
    const double v = tangle_loss(s, s, tau);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Tangle, IndependentVectorsScoreLogB) {
  double mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double v = tangle_loss(random_matrix(32, 64, seed), random_matrix(32, 64, 500 + seed), 1.0);
    EXPECT_NEAR(v, std::log(32.0), 0.3);
    mean += v / 20;
  }
  EXPECT_NEAR(mean, std::log(32.0), 0.05);
}

TEST(Tangle, CommonRotationLeavesLossUnchanged) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Tensor s = random_matrix(6, 7, seed), g = random_matrix(6, 7, 70 + seed);
    const Eigen::HouseholderQR<Mat> qr(to_eigen(random_matrix(7, 7, 900 + seed)));
    const Mat q = qr.householderQ();
    auto rotate = [&](const Tensor& t) {
      const Mat r = to_eigen(t) * q;
      Tensor out = Tensor::matrix(t.rows(), t.cols());
      for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) out(i, j) = r(i, j);
      return out;
    };
    EXPECT_NEAR(tangle_loss(rotate(s), rotate(g), 0.1), tangle_loss(s, g, 0.1), 1e-12);
  }
}

TEST(Tangle, Errors) {
  EXPECT_THROW(tangle_loss(random_matrix(1, 4, 1), random_matrix(1, 4, 2), 0.1), BatchError);
  EXPECT_THROW(tangle_loss(random_matrix(3, 4, 1), random_matrix(3, 4, 2), 0.0), ConfigError);
  EXPECT_THROW(tangle_loss(random_matrix(3, 4, 1), random_matrix(3, 5, 2), 0.1), ShapeError);
}

TEST(Retrieval, PerfectAndBruteForce) {
  const Tensor s = random_matrix(10, 6, 3);
  EXPECT_EQ(retrieval_top1(s, s), 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Tensor a = random_matrix(12, 6, seed), b = random_matrix(12, 6, 40 + seed);
    Mat an = to_eigen(a), bn = to_eigen(b);
    an.rowwise().normalize();
    bn.rowwise().normalize();
    const Mat sim = an * bn.transpose();
    int hits = 0;
    for (int i = 0; i < 12; ++i) {
      Eigen::Index r, c;
      sim.row(i).maxCoeff(&r, &c);
      hits += c == i;
      sim.col(i).maxCoeff(&r, &c);
      hits += r == i;
    }
    EXPECT_DOUBLE_EQ(retrieval_top1(a, b), hits / 24.0);
  }
}

TEST(Meanpool, Examples) {
  const Tensor v = Tensor::from_rows({{1.5, -2.0, 3.0}, {1.5, -2.0, 3.0}, {1.5, -2.0, 3.0}});
  EXPECT_EQ(max_diff(meanpool_slide(v), Tensor::from_rows({{1.5, -2.0, 3.0}})), 0.0);
  const Tensor e = Tensor::from_rows({{1, 0}, {0, 1}});
  EXPECT_EQ(max_diff(meanpool_slide(e), Tensor::from_rows({{0.5, 0.5}})), 0.0);
  const Tensor r = random_matrix(17, 5, 8);
  const Mat expect = to_eigen(r).colwise().mean();
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(meanpool_slide(r)(0, j), expect(0, j), 1e-14);
  EXPECT_THROW(meanpool_slide(Tensor::matrix(0, 3)), EmptyInputError);
}

// --- training -------------------------------------------------------------

const synth::EncoderRegistry& registry() {
  static const synth::EncoderRegistry r = synth::EncoderRegistry::desk_default();
  return r;
}

std::vector<SlidePair> raw_pairs(std::uint64_t base, std::size_t n) {
  const synth::SynthConfig sc;
  std::vector<synth::SyntheticSlide> slides;
  std::vector<synth::EmbeddingGrid> grids;
  for (std::size_t i = 0; i < n; ++i) {
    slides.push_back(synth::generate_slide(base + i, sc));
    grids.push_back(synth::encode_tiles(slides.back(), registry(), "enc-a"));
  }
  return make_slide_pairs(slides, grids, Source::kRaw);
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::path(::testing::TempDir()) / ("ticon_agg_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AggTrainConfig quick_config(std::int64_t iters) {
  AggTrainConfig c;
  c.batch_size = 8;
  c.sched = {1e-3, 2, iters, 0.1};
  c.eval_interval = 2;
  c.hidden = 16;
  c.attn_dim = 8;
  c.slide_dim = 8;
  return c;
}

TEST(SlidePairs, RawRowsAndCtxNeedsParams) {
  const synth::SynthConfig sc;
  const auto slide = synth::generate_slide(5, sc);
  const auto grid = synth::encode_tiles(slide, registry(), "enc-b");
  const auto pairs = make_slide_pairs({slide}, {grid}, Source::kRaw);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].tiles.rows(), grid.num_valid());
  EXPECT_EQ(pairs[0].tiles.cols(), grid.dim);
  EXPECT_EQ(pairs[0].gene, slide.gene_vector);
  EXPECT_EQ(pairs[0].label, slide.slide_label);
  EXPECT_THROW(make_slide_pairs({slide}, {grid}, Source::kCtx), ConfigError);
  EXPECT_THROW(make_slide_pairs({slide, slide}, {grid}, Source::kRaw), ShapeError);
  EXPECT_THROW(parse_source("iso"), ConfigError);
}

TEST(AggConfig, RoundtripAndValidation) {
  AggTrainConfig c = quick_config(7);
  c.attention = AttentionKind::kTanh;
  c.temperature = 0.2;
  KvText kv;
  c.write(kv);
  EXPECT_TRUE(AggTrainConfig::read(KvText::parse(kv.render())) == c);
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AggPretrain, DeterministicFilesAndCheckpointRoundtrip) {
  const auto tr = raw_pairs(100, 12), ho = raw_pairs(200, 6);
  AggOptions a, b;
  a.out_dir = scratch("a");
  b.out_dir = scratch("b");
  AggTrainConfig cfg = quick_config(4);
  cfg.max_tokens = 16;  // forces per-step subsampling
  const AggResult ra = pretrain_aggregator(tr, ho, cfg, a);
  const AggResult rb = pretrain_aggregator(tr, ho, cfg, b);
  EXPECT_EQ(slurp(a.out_dir / "metrics.jsonl"), slurp(b.out_dir / "metrics.jsonl"));
  EXPECT_EQ(slurp(a.out_dir / "eval.jsonl"), slurp(b.out_dir / "eval.jsonl"));
  EXPECT_TRUE(ra.params == rb.params);
  ASSERT_EQ(ra.evals.size(), 3u);  // iterations 0, 2, 4
  EXPECT_EQ(ra.evals.back().iter, 4);
  EXPECT_TRUE(load_aggregator(ra.checkpoint) == ra.params);

  auto bytes = io::read_file(ra.checkpoint);
  bytes[bytes.size() / 2] ^= 0x20;
  const auto bad = a.out_dir / "bad.tck";
  io::write_file(bad, bytes);
  EXPECT_THROW(load_aggregator(bad), FormatError);
}

TEST(AggPretrain, CorpusErrors) {
  const auto tr = raw_pairs(100, 4), ho = raw_pairs(200, 2);
  EXPECT_THROW(pretrain_aggregator({}, ho, quick_config(2)), EmptyInputError);
  EXPECT_THROW(pretrain_aggregator(tr, {ho[0]}, quick_config(2)), BatchError);
  auto mixed = tr;
  mixed[1].tiles = Tensor::matrix(3, 7, 1.0);
  EXPECT_THROW(pretrain_aggregator(mixed, ho, quick_config(2)), ShapeError);
}

TEST(AggPretrain, DeskRunRetrievesAboveChanceAndFrozenRunDoesNot) {
  const auto tr = raw_pairs(20000, 256), ho = raw_pairs(30000, 64);
  AggTrainConfig cfg;  // desk defaults: batch 32, 1000 iterations
  const AggResult trained = pretrain_aggregator(tr, ho, cfg);
  const AggEval& last = trained.evals.back();
  EXPECT_EQ(last.iter, 1000);
  EXPECT_DOUBLE_EQ(last.chance, 1.0 / 32);
  EXPECT_GE(last.retrieval, 3.0 * last.chance);
  EXPECT_LT(last.loss, trained.evals.front().loss);

  AggTrainConfig frozen = cfg;
  frozen.sched.base_lr = 0.0;
  frozen.sched.total_iters = 100;
  frozen.sched.warmup_iters = 10;
  const AggResult still = pretrain_aggregator(tr, ho, frozen);
  EXPECT_TRUE(still.params == init_abmil(cfg.model_config(tr[0].tiles.cols(), tr[0].gene.size()), 1));
  for (const AggEval& e : still.evals) EXPECT_LT(e.retrieval, 3.0 * e.chance);
}

TEST(SlideProbe, UsesPooledVectorsAndSlideLabels) {
  const auto pairs = raw_pairs(500, 60);
  eval::BenchConfig bc;
  const auto split = eval::slide_splits(pairs.size(), bc);
  const Tensor f = meanpool_slides(pairs);
  EXPECT_EQ(f.cols(), pairs[0].tiles.cols());
  const eval::EvalReport r = slide_probe(f, pairs, split);
  EXPECT_EQ(r.task, "slide");
  EXPECT_EQ(r.metric, "balanced-accuracy");
  EXPECT_GE(r.value, 0.0);
  EXPECT_LE(r.value, 1.0);
}

}  // namespace
}  // namespace ticon::agg
