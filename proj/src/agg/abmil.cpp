// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/agg/abmil.hpp"

#include <cmath>
#include <numeric>

#include "ticon/errors.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/rng.hpp"

namespace ticon::agg {

using num::Parameter;
using num::Tape;
using num::Tensor;
using num::Var;

std::string attention_name(AttentionKind k) { return k == AttentionKind::kGated ? "gated" : "tanh"; }

AttentionKind parse_attention(const std::string& s) {
  if (s == "gated") return AttentionKind::kGated;
  if (s == "tanh") return AttentionKind::kTanh;
  throw ConfigError("unknown attention kind '" + s + "' (expected gated or tanh)");
}

void AbmilConfig::validate() const {
  if (tile_dim == 0 || gene_dim == 0) throw ConfigError("aggregator: tile_dim and gene_dim must be set");
  if (hidden == 0 || attn_dim == 0 || heads == 0 || slide_dim == 0) throw ConfigError("aggregator: zero width");
}

void AbmilConfig::write(KvText& kv, const std::string& s) const {
  kv.set(s + ".tile_dim", static_cast<std::uint64_t>(tile_dim));
  kv.set(s + ".gene_dim", static_cast<std::uint64_t>(gene_dim));
  kv.set(s + ".hidden", static_cast<std::uint64_t>(hidden));
  kv.set(s + ".attn_dim", static_cast<std::uint64_t>(attn_dim));
  kv.set(s + ".heads", static_cast<std::uint64_t>(heads));
  kv.set(s + ".slide_dim", static_cast<std::uint64_t>(slide_dim));
  kv.set(s + ".attention", attention_name(attention));
}

AbmilConfig AbmilConfig::read(const KvText& kv, const std::string& s) {
  AbmilConfig c;
  c.tile_dim = kv.get_u64_or(s + ".tile_dim", c.tile_dim);
  c.gene_dim = kv.get_u64_or(s + ".gene_dim", c.gene_dim);
  c.hidden = kv.get_u64_or(s + ".hidden", c.hidden);
  c.attn_dim = kv.get_u64_or(s + ".attn_dim", c.attn_dim);
  c.heads = kv.get_u64_or(s + ".heads", c.heads);
  c.slide_dim = kv.get_u64_or(s + ".slide_dim", c.slide_dim);
  c.attention = parse_attention(kv.get_or(s + ".attention", attention_name(c.attention)));
  c.validate();
  return c;
}

Parameter& AbmilParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RegistryError("no aggregator parameter named '" + name + "'");
  return it->second;
}

const Parameter& AbmilParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RegistryError("no aggregator parameter named '" + name + "'");
  return it->second;
}

std::vector<Parameter*> AbmilParams::all() {
  std::vector<Parameter*> out;
  for (auto& [_, p] : tensors) out.push_back(&p);
  return out;
}

std::size_t AbmilParams::count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, p] : tensors)
    if (name.rfind(prefix, 0) == 0) n += p.value.size();
  return n;
}

void AbmilParams::zero_grad() {
  for (auto& [_, p] : tensors) p.zero_grad();
}

bool operator==(const AbmilParams& a, const AbmilParams& b) {
  if (!(a.config == b.config) || a.tensors.size() != b.tensors.size()) return false;
  for (const auto& [name, p] : a.tensors) {
    auto it = b.tensors.find(name);
    if (it == b.tensors.end() || !(it->second.value == p.value)) return false;
  }
  return true;
}

std::vector<std::pair<std::string, num::Shape>> abmil_shapes(const AbmilConfig& c) {
  std::vector<std::pair<std::string, num::Shape>> s;
  auto linear = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    s.emplace_back(prefix + ".w", num::Shape{in, out});
    s.emplace_back(prefix + ".b", num::Shape{1, out});
  };
  linear("pre.0", c.tile_dim, c.hidden);
  linear("pre.1", c.hidden, c.hidden);
  linear("pre.2", c.hidden, c.hidden);
  for (std::size_t h = 0; h < c.heads; ++h) {
    const std::string a = "attn." + std::to_string(h);
    linear(a + ".V", c.hidden, c.attn_dim);
    if (c.attention == AttentionKind::kGated) linear(a + ".U", c.hidden, c.attn_dim);
    s.emplace_back(a + ".w.w", num::Shape{c.attn_dim, 1});
  }
  linear("post", c.heads * c.hidden, c.slide_dim);
  linear("gene.0", c.gene_dim, c.hidden);
  linear("gene.1", c.hidden, c.hidden);
  linear("gene.2", c.hidden, c.slide_dim);
  return s;
}

AbmilParams init_abmil(const AbmilConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  AbmilParams p;
  p.config = cfg;
  for (const auto& [name, shape] : abmil_shapes(cfg)) {
    Tensor t(shape, 0.0);
    const bool weight = name.compare(name.size() - 2, 2, ".w") == 0;
    if (weight) {
      Rng rng = Rng::stream(seed, "agg/init/" + name);
      const double sd = 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (double& v : t.data()) v = sd * rng.normal();
    }
    p.tensors.emplace(name, Parameter(name, std::move(t), weight));
  }
  return p;
}

namespace {

// P is AbmilParams or const AbmilParams; the const overload of Tape::param
// binds read-only leaves.
template <class P>
Var lin(Tape& t, P& p, const std::string& prefix, Var x) {
  return num::ops::linear(x, t.param(p.at(prefix + ".w")), t.param(p.at(prefix + ".b")));
}

template <class P>
Var mlp3(Tape& t, P& p, const std::string& prefix, Var x) {
  Var h = num::ops::gelu(lin(t, p, prefix + ".0", x));
  h = num::ops::gelu(lin(t, p, prefix + ".1", h));
  return lin(t, p, prefix + ".2", h);
}

template <class P>
PoolVars pool(Tape& t, P& p, Var tiles) {
  const AbmilConfig& c = p.config;
  if (tiles.rows() == 0) throw EmptyInputError("abmil: bag has no tiles");
  if (tiles.cols() != c.tile_dim) {
    throw ShapeError("abmil: tiles have width " + std::to_string(tiles.cols()) + ", expected " +
                     std::to_string(c.tile_dim));
  }
  const Var h = mlp3(t, p, "pre", tiles);
  PoolVars out;
  std::vector<Var> pooled;
  for (std::size_t k = 0; k < c.heads; ++k) {
    const std::string a = "attn." + std::to_string(k);
    Var gate = num::ops::tanh(lin(t, p, a + ".V", h));
    if (c.attention == AttentionKind::kGated) gate = num::ops::mul(gate, num::ops::sigmoid(lin(t, p, a + ".U", h)));
    const Var scores = num::ops::matmul(gate, t.param(p.at(a + ".w.w")));  // n x 1
    const Var w = num::ops::softmax_rows(num::ops::transpose(scores));     // 1 x n
    out.attention.push_back(w);
    pooled.push_back(num::ops::matmul(w, h));
  }
  out.slide = lin(t, p, "post", num::ops::concat_cols(pooled));
  return out;
}

}  // namespace

PoolVars abmil_pool(Tape& tape, AbmilParams& params, Var tiles) { return pool(tape, params, tiles); }

Var gene_branch(Tape& tape, AbmilParams& params, Var genes) {
  if (genes.cols() != params.config.gene_dim) throw ShapeError("abmil: gene vectors have the wrong width");
  return mlp3(tape, params, "gene", genes);
}

PoolResult abmil_forward(const AbmilParams& params, const Tensor& tiles) {
  if (tiles.rows() == 0 || tiles.empty()) throw EmptyInputError("abmil: bag has no tiles");
  Tape tape(false);
  const PoolVars v = pool(tape, params, tape.constant(tiles));
  PoolResult r;
  r.slide = v.slide.value();
  for (const Var& a : v.attention) r.attention.emplace_back(a.value().data().begin(), a.value().data().end());
  return r;
}

Tensor gene_embed(const AbmilParams& params, const Tensor& genes) {
  if (genes.cols() != params.config.gene_dim) throw ShapeError("abmil: gene vectors have the wrong width");
  Tape tape(false);
  return mlp3(tape, params, "gene", tape.constant(genes)).value();
}

Var tangle_loss(Var slide, Var gene, double temperature) {
  const std::size_t b = slide.rows();
  if (b < 2) throw BatchError("tangle_loss: need at least 2 pairs, got " + std::to_string(b));
  if (gene.rows() != b || gene.cols() != slide.cols()) throw ShapeError("tangle_loss: batches differ in shape");
  if (!(temperature > 0)) throw ConfigError("tangle_loss: temperature must be positive");
  const Var logits = num::ops::scale(
      num::ops::matmul_nt(num::ops::l2_normalize_rows(slide), num::ops::l2_normalize_rows(gene)), 1.0 / temperature);
  std::vector<std::size_t> diag(b);
  std::iota(diag.begin(), diag.end(), 0);
  const Var s2g = num::ops::mean(num::ops::pick_cols(num::ops::log_softmax_rows(logits), diag));
  const Var g2s = num::ops::mean(num::ops::pick_cols(num::ops::log_softmax_rows(num::ops::transpose(logits)), diag));
  return num::ops::scale(num::ops::add(s2g, g2s), -0.5);
}

double tangle_loss(const Tensor& slide, const Tensor& gene, double temperature) {
  Tape tape(false);
  return tangle_loss(tape.constant(slide), tape.constant(gene), temperature).value().item();
}

double retrieval_top1(const Tensor& slide, const Tensor& gene) {
  const std::size_t b = slide.rows();
  if (b == 0 || gene.rows() != b || gene.cols() != slide.cols()) throw ShapeError("retrieval: batches differ in shape");
  Tape tape(false);
  const Tensor sim = num::ops::matmul_nt(num::ops::l2_normalize_rows(tape.constant(slide)),
                                         num::ops::l2_normalize_rows(tape.constant(gene)))
                         .value();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t row_best = 0, col_best = 0;
    for (std::size_t j = 1; j < b; ++j) {
      if (sim(i, j) > sim(i, row_best)) row_best = j;
      if (sim(j, i) > sim(col_best, i)) col_best = j;
    }
    hits += (row_best == i) + (col_best == i);
  }
  return static_cast<double>(hits) / (2.0 * b);
}

Tensor meanpool_slide(const Tensor& tiles) {
  if (tiles.rows() == 0 || tiles.empty()) throw EmptyInputError("meanpool: bag has no tiles");
  Tensor out = Tensor::matrix(1, tiles.cols());
  for (std::size_t r = 0; r < tiles.rows(); ++r)
    for (std::size_t c = 0; c < tiles.cols(); ++c) out(0, c) += tiles(r, c);
  for (double& v : out.data()) v /= static_cast<double>(tiles.rows());
  return out;
}

}  // namespace ticon::agg
