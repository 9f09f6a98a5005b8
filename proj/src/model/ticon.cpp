// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/model/ticon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "ticon/errors.hpp"
#include "ticon/numerics/ops.hpp"

namespace ticon::model {

using num::Tape;
using num::Tensor;
using num::Var;
namespace ops = num::ops;

double alibi_slope(std::size_t head, std::size_t heads) {
  return std::exp2(-8.0 * static_cast<double>(head + 1) / static_cast<double>(heads));
}

double alibi_bias(std::size_t head, GridPos a, GridPos b, std::size_t heads) {
  const double dist = std::abs(static_cast<double>(a.row) - b.row) + std::abs(static_cast<double>(a.col) - b.col);
  return -alibi_slope(head, heads) * dist;
}

TokenLayout TokenLayout::single(std::vector<GridPos> pos) {
  TokenLayout t;
  t.group.assign(pos.size(), 0);
  t.pos = std::move(pos);
  return t;
}

std::vector<Tensor> attention_biases(const TokenLayout& q, const TokenLayout& k, std::size_t heads) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t nq = q.size(), nk = k.size();
  std::vector<Tensor> out;
  out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor b = Tensor::matrix(nq, nk);
    for (std::size_t i = 0; i < nq; ++i)
      for (std::size_t j = 0; j < nk; ++j)
        b(i, j) = q.group[i] == k.group[j] ? alibi_bias(h, q.pos[i], k.pos[j], heads) : kNegInf;
    out.push_back(std::move(b));
  }
  return out;
}

Var TiconNet::p(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_.param(params_.at(name));
  bound_.emplace(name, v);
  return v;
}

Var TiconNet::linear(const std::string& prefix, Var x) { return ops::linear(x, p(prefix + ".w"), p(prefix + ".b")); }

Var TiconNet::norm(const std::string& prefix, Var x) {
  return ops::layer_norm(x, p(prefix + ".g"), p(prefix + ".b"));
}

Var TiconNet::mlp(const std::string& prefix, Var x) {
  return linear(prefix + ".fc2", ops::gelu(linear(prefix + ".fc1", x)));
}

Var TiconNet::attend(Var q, Var k, Var v, const std::vector<Tensor>& biases) {
  const std::size_t heads = params_.config.heads, dh = params_.config.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = ops::slice_cols(q, h * dh, dh);
    Var kh = ops::slice_cols(k, h * dh, dh);
    Var vh = ops::slice_cols(v, h * dh, dh);
    Var w = ops::softmax_rows(ops::scale(ops::matmul_nt(qh, kh), inv_sqrt), &biases[h]);
    outs.push_back(ops::matmul(w, vh));
  }
  return heads == 1 ? outs.front() : ops::concat_cols(outs);
}

Var TiconNet::encode(const std::string& input_id, Var x, const TokenLayout& layout) {
  const ModelConfig& c = params_.config;
  const std::size_t d_in = c.input_dim(input_id);
  if (x.rows() == 0 || layout.size() == 0) throw EmptyInputError("encode: no visible tokens");
  if (x.cols() != d_in) {
    throw ShapeError("encode: '" + input_id + "' embeddings have width " + std::to_string(x.cols()) +
                     ", expected " + std::to_string(d_in));
  }
  if (x.rows() != layout.size()) throw ShapeError("encode: token count does not match the layout");
  const std::size_t d = c.d_model;
  Var h = mlp("proj." + input_id, x);
  const auto biases = attention_biases(layout, layout, c.heads);
  for (std::size_t l = 0; l < c.encoder_depth; ++l) {
    const std::string b = "enc." + std::to_string(l);
    Var qkv = linear(b + ".qkv", norm(b + ".ln1", h));
    Var a = attend(ops::slice_cols(qkv, 0, d), ops::slice_cols(qkv, d, d), ops::slice_cols(qkv, 2 * d, d), biases);
    h = ops::add(h, linear(b + ".out", a));
    h = ops::add(h, mlp(b, norm(b + ".ln2", h)));
  }
  return norm("enc.norm", h);
}

std::map<std::string, Var> TiconNet::decode(Var ctx, const TokenLayout& ctx_layout, const TokenLayout& pred,
                                            const std::vector<std::string>& targets) {
  const ModelConfig& c = params_.config;
  if (pred.size() == 0) throw EmptyInputError("decode_predict: no prediction positions");
  if (ctx.rows() != ctx_layout.size()) throw ShapeError("decode_predict: context does not match its layout");
  for (const auto& id : targets) c.target_dim(id);
  for (std::uint32_t g : pred.group) {
    bool found = false;
    for (std::uint32_t cg : ctx_layout.group) found = found || cg == g;
    if (!found) throw EmptyInputError("decode_predict: prediction group without visible context");
  }
  const std::size_t d = c.d_model;
  Var z = ops::repeat_rows(p("dec.mask_token"), pred.size());
  const auto cross = attention_biases(pred, ctx_layout, c.heads);
  std::vector<Tensor> self;
  if (c.decoder_self_attention) self = attention_biases(pred, pred, c.heads);
  for (std::size_t l = 0; l < c.decoder_depth; ++l) {
    const std::string b = "dec." + std::to_string(l);
    if (c.decoder_self_attention) {
      Var qkv = linear(b + ".sa_qkv", norm(b + ".ln_sa", z));
      Var a = attend(ops::slice_cols(qkv, 0, d), ops::slice_cols(qkv, d, d), ops::slice_cols(qkv, 2 * d, d), self);
      z = ops::add(z, linear(b + ".sa_out", a));
    }
    Var q = linear(b + ".ca_q", norm(b + ".ln_ca", z));
    Var kv = linear(b + ".ca_kv", ctx);
    Var a = attend(q, ops::slice_cols(kv, 0, d), ops::slice_cols(kv, d, d), cross);
    z = ops::add(z, linear(b + ".ca_out", a));
    z = ops::add(z, mlp(b, norm(b + ".ln_mlp", z)));
  }
  z = norm("dec.norm", z);
  std::map<std::string, Var> out;
  for (const auto& id : targets) out.emplace(id, mlp("head." + id, z));
  return out;
}

namespace {

// Inference tapes never record gradients, so binding through a mutable
// reference cannot write to the parameters.
TiconParams& unconst(const TiconParams& p) { return const_cast<TiconParams&>(p); }

}  // namespace

ContextOutput encode(const TiconParams& params, const std::string& input_id, const Tensor& embeddings,
                     const std::vector<GridPos>& positions) {
  if (positions.empty()) throw EmptyInputError("encode: no visible tokens");
  Tape tape(false);
  TiconNet net(tape, unconst(params));
  Var out = net.encode(input_id, tape.constant(embeddings), TokenLayout::single(positions));
  return {out.value(), positions};
}

std::map<std::string, Tensor> decode_predict(const TiconParams& params, const ContextOutput& ctx,
                                             const std::vector<GridPos>& pred,
                                             const std::vector<std::string>& targets) {
  Tape tape(false);
  TiconNet net(tape, unconst(params));
  auto ys = net.decode(tape.constant(ctx.e_ctx), TokenLayout::single(ctx.positions), TokenLayout::single(pred),
                       targets);
  std::map<std::string, Tensor> out;
  for (auto& [id, v] : ys) out.emplace(id, v.value());
  return out;
}

Tensor valid_rows(const synth::EmbeddingGrid& grid) {
  Tensor t = Tensor::matrix(grid.num_valid(), grid.dim);
  std::size_t r = 0;
  for (std::size_t i = 0; i < grid.validity.size(); ++i) {
    if (!grid.validity[i]) continue;
    for (std::size_t k = 0; k < grid.dim; ++k) t(r, k) = grid.embeddings[i * grid.dim + k];
    ++r;
  }
  return t;
}

std::vector<GridPos> valid_positions(const synth::EmbeddingGrid& grid) {
  std::vector<GridPos> pos;
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 0; c < grid.cols; ++c)
      if (grid.valid(r, c)) pos.push_back({static_cast<std::int32_t>(r), static_cast<std::int32_t>(c)});
  return pos;
}

Tensor contextualize_valid(const TiconParams& params, const std::string& input_id, const synth::EmbeddingGrid& grid) {
  params.config.input_dim(input_id);
  if (grid.num_valid() == 0) throw EmptyInputError("contextualize: grid has no valid tiles");
  if (grid.dim != params.config.input_dim(input_id)) {
    throw ShapeError("contextualize: grid of '" + grid.encoder_id + "' has dim " + std::to_string(grid.dim) +
                     " but '" + input_id + "' expects " + std::to_string(params.config.input_dim(input_id)));
  }
  return encode(params, input_id, valid_rows(grid), valid_positions(grid)).e_ctx;
}

synth::EmbeddingGrid contextualize(const TiconParams& params, const std::string& input_id,
                                   const synth::EmbeddingGrid& grid) {
  const Tensor e = contextualize_valid(params, input_id, grid);
  const std::size_t d = params.config.d_model;
  synth::EmbeddingGrid out =
      synth::EmbeddingGrid::zeros("ticon/" + input_id, grid.rows, grid.cols, static_cast<std::uint32_t>(d));
  out.origin_row = grid.origin_row;
  out.origin_col = grid.origin_col;
  out.validity = grid.validity;
  std::size_t r = 0;
  for (std::size_t i = 0; i < grid.validity.size(); ++i) {
    if (!grid.validity[i]) continue;
    for (std::size_t k = 0; k < d; ++k) out.embeddings[i * d + k] = static_cast<float>(e(r, k));
    ++r;
  }
  return out;
}

Tensor contextualize_isolated(const TiconParams& params, const std::string& input_id,
                              std::span<const float> embedding) {
  const std::size_t d_in = params.config.input_dim(input_id);
  if (embedding.size() != d_in) {
    throw ShapeError("contextualize_isolated: '" + input_id + "' expects " + std::to_string(d_in) + " dims, got " +
                     std::to_string(embedding.size()));
  }
  Tensor x = Tensor::matrix(1, d_in);
  for (std::size_t k = 0; k < d_in; ++k) x(0, k) = embedding[k];
  return encode(params, input_id, x, {GridPos{}}).e_ctx;
}

Tensor contextualize_isolated_batch(const TiconParams& params, const std::string& input_id,
                                    const Tensor& embeddings) {
  const std::size_t n = embeddings.rows();
  if (n == 0) throw EmptyInputError("contextualize_isolated_batch: no tiles");
  // Chunks bound the n x n block-diagonal attention matrices.
  constexpr std::size_t kChunk = 256;
  Tensor out = Tensor::matrix(n, params.config.d_model);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    Tensor x = Tensor::matrix(m, embeddings.cols());
    for (std::size_t i = 0; i < m; ++i) {
      auto src = embeddings.row_span(start + i);
      std::copy(src.begin(), src.end(), x.row_span(i).begin());
    }
    TokenLayout layout;
    layout.pos.assign(m, GridPos{});
    layout.group.resize(m);
    for (std::size_t i = 0; i < m; ++i) layout.group[i] = static_cast<std::uint32_t>(i);
    Tape tape(false);
    TiconNet net(tape, unconst(params));
    const Tensor y = net.encode(input_id, tape.constant(std::move(x)), layout).value();
    for (std::size_t i = 0; i < m; ++i) {
      auto src = y.row_span(i);
      std::copy(src.begin(), src.end(), out.row_span(start + i).begin());
    }
  }
  return out;
}

}  // namespace ticon::model
