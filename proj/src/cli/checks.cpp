// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/cli/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <set>

#include "ticon/agg/abmil.hpp"
#include "ticon/errors.hpp"
#include "ticon/model/checkpoint.hpp"
#include "ticon/numerics/gradcheck.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/rng.hpp"
#include "ticon/train/ofmm.hpp"

namespace ticon::cli {

namespace {

using num::Tape;
using num::Tensor;
using num::Var;

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

Var project(Tape& tape, Var y, std::uint64_t seed) {
  Rng rng(seed);
  return num::ops::sum(num::ops::mul(y, tape.constant(random_tensor(rng, y.rows(), y.cols()))));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

using OpCase = std::function<Var(Tape&, Var, Rng&, std::size_t, std::size_t)>;

double worst_case(const OpCase& op, std::size_t trials, std::uint64_t seed, double input_scale) {
  Rng shapes(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t r = 1 + shapes.below(12), c = 1 + shapes.below(12);
    const Tensor x = random_tensor(shapes, r, c, input_scale);
    const std::uint64_t aux_seed = shapes.next_u64();
    worst = std::max(worst, num::grad_check(
                                [&](Tape& tape, Var in) {
                                  Rng aux(aux_seed);
                                  return project(tape, op(tape, in, aux, r, c), aux_seed + 1);
                                },
                                x, 1e-5));
  }
  return worst;
}

std::vector<std::size_t> random_indices(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}

template <class F>
bool throws_format(F f, std::uint64_t* offset = nullptr) {
  try {
    f();
  } catch (const FormatError& e) {
    if (offset) *offset = e.offset();
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace

std::vector<GradCase> primitive_grad_checks(std::size_t trials) {
  namespace ops = num::ops;
  const std::vector<std::pair<std::string, std::pair<OpCase, double>>> cases = {
      {"matmul", {[](Tape& t, Var x, Rng& a, std::size_t, std::size_t c) { return ops::matmul(x, t.constant(random_tensor(a, c, 5))); }, 1.0}},
      {"matmul(rhs)", {[](Tape& t, Var x, Rng& a, std::size_t r, std::size_t) { return ops::matmul(t.constant(random_tensor(a, 3, r)), x); }, 1.0}},
      {"matmul_nt", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::matmul_nt(x, x); }, 1.0}},
      {"add", {[](Tape& t, Var x, Rng& a, std::size_t r, std::size_t c) { return ops::add(x, t.constant(random_tensor(a, r, c))); }, 1.0}},
      {"sub", {[](Tape& t, Var x, Rng& a, std::size_t r, std::size_t c) { return ops::sub(t.constant(random_tensor(a, r, c)), x); }, 1.0}},
      {"mul", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::mul(x, x); }, 1.0}},
      {"scale", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::scale(x, -1.7); }, 1.0}},
      {"mul_const", {[](Tape&, Var x, Rng& a, std::size_t r, std::size_t c) { return ops::mul_const(x, random_tensor(a, r, c)); }, 1.0}},
      {"add_row", {[](Tape& t, Var x, Rng& a, std::size_t, std::size_t c) { return ops::add_row(t.constant(random_tensor(a, 4, c)), ops::mean_rows(x)); }, 1.0}},
      {"linear", {[](Tape& t, Var x, Rng& a, std::size_t, std::size_t c) {
         return ops::linear(x, t.constant(random_tensor(a, c, 4)), t.constant(random_tensor(a, 1, 4)));
       }, 1.0}},
      {"layer_norm", {[](Tape& t, Var x, Rng& a, std::size_t, std::size_t c) {
         return ops::layer_norm(x, t.constant(random_tensor(a, 1, c)), t.constant(random_tensor(a, 1, c)));
       }, 1.0}},
      {"softmax_rows", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::softmax_rows(x); }, 2.0}},
      {"softmax_rows(bias)", {[](Tape&, Var x, Rng& a, std::size_t r, std::size_t c) {
         Tensor b = random_tensor(a, r, c);
         for (std::size_t i = 0; i < r; ++i)
           if (c > 1) b(i, a.below(c)) = -std::numeric_limits<double>::infinity();
         return ops::mul(ops::softmax_rows(x, &b), ops::softmax_rows(x, &b));
       }, 2.0}},
      {"log_softmax_rows", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::log_softmax_rows(x); }, 2.0}},
      {"gelu", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::gelu(x); }, 2.0}},
      {"tanh", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::tanh(x); }, 2.0}},
      {"sigmoid", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::sigmoid(x); }, 2.0}},
      {"l2_normalize_rows", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::l2_normalize_rows(x); }, 1.0}},
      {"cosine_rows", {[](Tape& t, Var x, Rng& a, std::size_t r, std::size_t c) { return ops::cosine_rows(x, t.constant(random_tensor(a, r, c))); }, 1.0}},
      {"mean_rows(idx)", {[](Tape&, Var x, Rng& a, std::size_t r, std::size_t) {
         const auto idx = random_indices(a, r, 1 + a.below(6));
         return ops::mean_rows(x, idx);
       }, 1.0}},
      {"mean_rows", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::mean_rows(x); }, 1.0}},
      {"sum", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::sum(ops::mul(x, x)); }, 1.0}},
      {"mean", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::mean(ops::mul(x, x)); }, 1.0}},
      {"concat_cols", {[](Tape& t, Var x, Rng& a, std::size_t r, std::size_t) {
         return ops::concat_cols({x, t.constant(random_tensor(a, r, 2)), ops::scale(x, 2.0)});
       }, 1.0}},
      {"concat_rows", {[](Tape& t, Var x, Rng& a, std::size_t, std::size_t c) {
         return ops::concat_rows({ops::tanh(x), t.constant(random_tensor(a, 2, c)), x});
       }, 1.0}},
      {"gather_rows", {[](Tape&, Var x, Rng& a, std::size_t r, std::size_t) {
         const auto idx = random_indices(a, r, 1 + a.below(8));
         return ops::gather_rows(x, idx);
       }, 1.0}},
      {"slice_cols", {[](Tape&, Var x, Rng& a, std::size_t, std::size_t c) {
         const std::size_t start = a.below(c);
         return ops::slice_cols(x, start, 1 + a.below(c - start));
       }, 1.0}},
      {"transpose", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::transpose(x); }, 1.0}},
      {"repeat_rows", {[](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::repeat_rows(ops::mean_rows(x), 3); }, 1.0}},
      {"pick_cols", {[](Tape&, Var x, Rng& a, std::size_t r, std::size_t c) {
         const auto cols = random_indices(a, c, r);
         return ops::pick_cols(x, cols);
       }, 1.0}},
  };
  std::vector<GradCase> out;
  std::uint64_t seed = 0x6AD;
  for (const auto& [name, op] : cases) out.push_back({name, worst_case(op.first, trials, seed++, op.second)});
  return out;
}

double pipeline_grad_check(const synth::EncoderRegistry& registry) {
  const synth::SynthConfig sc;
  const std::vector<std::string> ids{"enc-a", "enc-b", "enc-c"};
  // First slide with a fully valid 2x2 window, scanned in seed order.
  train::GridSet grids;
  for (std::uint64_t seed = 8; grids.empty(); ++seed) {
    const synth::SyntheticSlide s = synth::generate_slide(seed, sc);
    for (std::size_t r = 0; r + 1 < s.rows && grids.empty(); ++r)
      for (std::size_t c = 0; c + 1 < s.cols && grids.empty(); ++c) {
        if (!(s.valid(r, c) && s.valid(r + 1, c) && s.valid(r, c + 1) && s.valid(r + 1, c + 1))) continue;
        for (const auto& id : ids) grids.emplace(id, synth::crop(synth::encode_tiles(s, registry, id), r, c, 2, 2));
      }
  }
  model::TiconParams params = model::init_params(model::ModelConfig::desk_default(registry), 12);
  Rng rng(4);
  for (auto& [name, p] : params.tensors)
    for (auto& v : p.value.data()) v += 0.05 * rng.normal();
  const std::vector<const train::GridSet*> items{&grids};
  const std::vector<train::MaskPlan> plans{train::make_mask_plan(grids.at("enc-a").validity, 2, 2, 0.75, 0.25, 6)};
  auto f = [&](Tape& tape) { return train::packed_ofmm_loss(tape, params, "enc-a", items, plans, ids).total; };
  std::vector<num::Parameter*> ps;
  for (auto& [name, p] : params.tensors)
    if (name.rfind("proj.enc-b", 0) != 0 && name.rfind("proj.enc-c", 0) != 0) ps.push_back(&p);
  return num::grad_check_params(f, ps, 1e-5, 6);
}

std::vector<Check> mask_law_checks(std::size_t seeds) {
  std::size_t partition_bad = 0, count_bad = 0, subset_bad = 0;
  Rng draw(0x3A5C);
  for (std::size_t s = 0; s < seeds; ++s) {
    const std::size_t rows = 2 + draw.below(7), cols = 2 + draw.below(7);
    std::vector<std::uint8_t> validity(rows * cols);
    std::size_t n = 0;
    while (n < 2) {
      n = 0;
      for (auto& v : validity) n += (v = draw.uniform() < 0.7 ? 1 : 0);
    }
    const double m_r = 0.05 + 0.9 * draw.uniform();
    const double p_r = std::max(1e-3, m_r * draw.uniform());
    const train::MaskPlan plan = train::make_mask_plan(validity, rows, cols, m_r, p_r, draw.next_u64());

    std::set<std::size_t> vis, msk, valid;
    for (std::size_t i = 0; i < validity.size(); ++i)
      if (validity[i]) valid.insert(i);
    for (const auto& p : plan.visible) vis.insert(p.row * cols + p.col);
    for (const auto& p : plan.masked) msk.insert(p.row * cols + p.col);
    std::set<std::size_t> uni = vis;
    uni.insert(msk.begin(), msk.end());
    const bool sorted = std::is_sorted(plan.visible.begin(), plan.visible.end(), [&](const auto& a, const auto& b) {
      return a.row * cols + a.col < b.row * cols + b.col;
    });
    if (uni != valid || vis.size() + msk.size() != n || vis.size() != plan.visible.size() ||
        msk.size() != plan.masked.size() || !sorted)
      ++partition_bad;

    const std::size_t n_mask =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(m_r * static_cast<double>(n))), 1, n - 1);
    const std::size_t n_pred = std::min<std::size_t>(
        n_mask, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p_r * static_cast<double>(n)))));
    if (plan.masked.size() != n_mask || plan.predicted.size() != n_pred) ++count_bad;

    std::set<std::size_t> pred;
    for (const auto& p : plan.predicted) pred.insert(p.row * cols + p.col);
    if (pred.size() != plan.predicted.size() || !std::includes(msk.begin(), msk.end(), pred.begin(), pred.end()))
      ++subset_bad;
  }

  // Per-position frequencies on a full 4x4 grid under the desk ratios.
  const std::vector<std::uint8_t> full(16, 1);
  std::vector<double> masked(16, 0.0), predicted(16, 0.0);
  bool exact = true;
  for (std::size_t s = 0; s < seeds; ++s) {
    const train::MaskPlan plan = train::make_mask_plan(full, 4, 4, 0.75, 0.25, stream_seed(0x4F, "freq/" + std::to_string(s)));
    exact = exact && plan.visible.size() == 4 && plan.masked.size() == 12 && plan.predicted.size() == 4;
    for (const auto& p : plan.masked) masked[p.row * 4 + p.col] += 1.0;
    for (const auto& p : plan.predicted) predicted[p.row * 4 + p.col] += 1.0;
  }
  const double n = static_cast<double>(seeds);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    worst_z = std::max(worst_z, std::abs(masked[i] / n - 0.75) / std::sqrt(0.75 * 0.25 / n));
    worst_z = std::max(worst_z, std::abs(predicted[i] / n - 0.25) / std::sqrt(0.25 * 0.75 / n));
  }

  const std::string over = " of " + std::to_string(seeds) + " plans";
  return {
      {"mask partition", partition_bad == 0, std::to_string(partition_bad) + " bad" + over},
      {"mask clamp counts", count_bad == 0, std::to_string(count_bad) + " bad" + over},
      {"mask prediction subset", subset_bad == 0, std::to_string(subset_bad) + " bad" + over},
      {"mask frequency", worst_z < 5.0, fmt("worst |z| %.2f (limit 5)", worst_z)},
      {"mask 16 -> 4/12/4", exact, exact ? "visible 4, masked 12, predicted 4" : "count mismatch"},
  };
}

std::vector<Check> format_checks(const synth::EncoderRegistry& registry) {
  std::vector<Check> out;
  const synth::SyntheticSlide slide = synth::generate_slide(77, synth::SynthConfig{});
  synth::EmbeddingGrid grid = synth::encode_tiles(slide, registry, "enc-b");
  grid.origin_row = -3;
  grid.origin_col = 5;
  const auto bytes = synth::serialize_grid(grid);
  const synth::EmbeddingGrid back = synth::parse_grid(bytes);
  out.push_back({"grid roundtrip", back == grid && synth::serialize_grid(back) == bytes,
                 std::to_string(bytes.size()) + " bytes"});

  auto corrupt = [](std::vector<std::uint8_t> b, std::size_t at) {
    b[at] ^= 0x5A;
    return b;
  };
  std::uint64_t off = 1;
  out.push_back({"grid bad magic", throws_format([&] { synth::parse_grid(corrupt(bytes, 0)); }, &off) && off == 0,
                 "FormatError at offset " + std::to_string(off)});
  out.push_back({"grid bad crc", throws_format([&] { synth::parse_grid(corrupt(bytes, bytes.size() - 1)); }), "FormatError"});
  // M is the u32 after magic and version.
  out.push_back({"grid bad length", throws_format([&] { synth::parse_grid(corrupt(bytes, 6)); }) &&
                                        throws_format([&] {
                                          synth::parse_grid(std::span(bytes).first(bytes.size() - 1));
                                        }),
                 "FormatError for a corrupted extent and a truncation"});

  const model::TiconParams params = model::init_params(model::ModelConfig::desk_default(registry), 5);
  const ckpt::Container c = model::to_container(params);
  bool exact = true;
  for (const auto dtype : {ckpt::DType::kF64, ckpt::DType::kF32}) {
    const auto cb = ckpt::serialize(c, dtype);
    const model::TiconParams p2 = model::params_from_container(ckpt::parse(cb));
    exact = exact && ckpt::serialize(model::to_container(p2), dtype) == cb;
    for (const auto& [name, t] : params.tensors) {
      const auto& a = t.value.data();
      const auto& b = p2.at(name).value.data();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double want = dtype == ckpt::DType::kF64 ? a[i] : static_cast<double>(static_cast<float>(a[i]));
        exact = exact && std::memcmp(&want, &b[i], sizeof(double)) == 0;
      }
    }
  }
  out.push_back({"checkpoint roundtrip", exact, "f64 and f32 containers"});
  const auto cb = ckpt::serialize(c, ckpt::DType::kF64);
  off = 1;
  out.push_back({"checkpoint bad magic", throws_format([&] { ckpt::parse(corrupt(cb, 0)); }, &off) && off == 0,
                 "FormatError at offset " + std::to_string(off)});
  out.push_back({"checkpoint bad crc", throws_format([&] { ckpt::parse(corrupt(cb, cb.size() - 2)); }), "FormatError"});
  // config_len follows magic, version and dtype.
  out.push_back({"checkpoint bad length", throws_format([&] { ckpt::parse(corrupt(cb, 10)); }) &&
                                              throws_format([&] { ckpt::parse(std::span(cb).first(cb.size() / 2)); }),
                 "FormatError for a corrupted length and a truncation"});
  return out;
}

std::vector<Check> aggregator_checks() {
  std::vector<Check> out;
  agg::AbmilConfig cfg;
  cfg.tile_dim = 7;
  cfg.gene_dim = 5;
  cfg.hidden = 12;
  cfg.attn_dim = 8;
  cfg.slide_dim = 6;
  Rng rng(91);
  const Tensor tiles = random_tensor(rng, 9, 7);
  double perm = 0.0, dup = 0.0;
  for (const auto kind : {agg::AttentionKind::kGated, agg::AttentionKind::kTanh}) {
    cfg.attention = kind;
    const agg::AbmilParams p = agg::init_abmil(cfg, 3);
    const Tensor base = agg::abmil_forward(p, tiles).slide;
    std::vector<std::size_t> order(9);
    for (std::size_t i = 0; i < 9; ++i) order[i] = i;
    rng.shuffle(order);
    Tensor shuffled = Tensor::matrix(9, 7), doubled = Tensor::matrix(18, 7);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 7; ++j) {
        shuffled(i, j) = tiles(order[i], j);
        doubled(i, j) = doubled(i + 9, j) = tiles(i, j);
      }
    const Tensor a = agg::abmil_forward(p, shuffled).slide, b = agg::abmil_forward(p, doubled).slide;
    for (std::size_t j = 0; j < base.cols(); ++j) {
      perm = std::max(perm, std::abs(a(0, j) - base(0, j)));
      dup = std::max(dup, std::abs(b(0, j) - base(0, j)));
    }
  }
  out.push_back({"abmil permutation invariance", perm <= 1e-12, fmt("max diff %.2e", perm)});
  out.push_back({"abmil duplication invariance", dup <= 1e-12, fmt("max diff %.2e", dup)});

  const std::size_t B = 6, d = 4;
  const Tensor s = random_tensor(rng, B, d), g = random_tensor(rng, B, d);
  const double tau = 0.3;
  std::vector<std::vector<double>> L(B, std::vector<double>(B));
  auto norm = [&](const Tensor& t, std::size_t i) {
    double n = 0.0;
    for (std::size_t k = 0; k < d; ++k) n += t(i, k) * t(i, k);
    return std::sqrt(n);
  };
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += s(i, k) * g(j, k);
      L[i][j] = dot / (norm(s, i) * norm(g, j)) / tau;
    }
  double rows = 0.0, cols = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    double zr = 0.0, zc = 0.0;
    for (std::size_t j = 0; j < B; ++j) {
      zr += std::exp(L[i][j]);
      zc += std::exp(L[j][i]);
    }
    rows += std::log(zr) - L[i][i];
    cols += std::log(zc) - L[i][i];
  }
  const double want = 0.5 * (rows + cols) / static_cast<double>(B);
  const double got = agg::tangle_loss(s, g, tau);
  out.push_back({"tangle loss oracle", std::abs(got - want) <= 1e-12, fmt("diff %.2e", std::abs(got - want))});
  return out;
}

}  // namespace ticon::cli
