// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ticon/kvtext.hpp"
#include "ticon/numerics/tape.hpp"

namespace ticon::agg {

enum class AttentionKind { kGated, kTanh };

std::string attention_name(AttentionKind k);
AttentionKind parse_attention(const std::string& s);

struct AbmilConfig {
  std::size_t tile_dim = 0;
  std::size_t gene_dim = 0;
  std::size_t hidden = 64;
  std::size_t attn_dim = 64;
  std::size_t heads = 2;
  std::size_t slide_dim = 64;
  AttentionKind attention = AttentionKind::kGated;

  /// ConfigError on zero widths.
  void validate() const;
  void write(KvText& kv, const std::string& section = "aggregator") const;
  static AbmilConfig read(const KvText& kv, const std::string& section = "aggregator");
  friend bool operator==(const AbmilConfig&, const AbmilConfig&) = default;
};

/// Tensors, stored [in, out]:
///
///   pre.{0,1,2}.{w,b}      tile MLP  tile_dim -> hidden -> hidden -> hidden
///   attn.<h>.V.{w,b}       tanh branch, hidden -> attn_dim
///   attn.<h>.U.{w,b}       sigmoid gate (gated attention only)
///   attn.<h>.w.w           attn_dim -> 1 score
///   post.{w,b}             heads * hidden -> slide_dim
///   gene.{0,1,2}.{w,b}     gene MLP  gene_dim -> hidden -> hidden -> slide_dim
struct AbmilParams {
  AbmilConfig config;
  std::map<std::string, num::Parameter> tensors;

  num::Parameter& at(const std::string& name);
  const num::Parameter& at(const std::string& name) const;
  std::vector<num::Parameter*> all();
  std::size_t count(const std::string& prefix = "") const;
  void zero_grad();

  friend bool operator==(const AbmilParams& a, const AbmilParams& b);
};

/// Weights ~ N(0, 1/fan_in), biases 0, each tensor from its own sub-stream.
AbmilParams init_abmil(const AbmilConfig& cfg, std::uint64_t seed);
std::vector<std::pair<std::string, num::Shape>> abmil_shapes(const AbmilConfig& cfg);

struct PoolVars {
  num::Var slide;                   // 1 x slide_dim
  std::vector<num::Var> attention;  // per head, 1 x n
};

/// Tape-level pooling of one bag (n x tile_dim).
PoolVars abmil_pool(num::Tape& tape, AbmilParams& params, num::Var tiles);
/// B x gene_dim -> B x slide_dim.
num::Var gene_branch(num::Tape& tape, AbmilParams& params, num::Var genes);

struct PoolResult {
  num::Tensor slide;
  std::vector<std::vector<double>> attention;
};

/// Per head, a_k = softmax_k(w^T (tanh(V h_k) * sigmoid(U h_k))) over the
/// pre-MLP features h; the heads' weighted sums are concatenated and
/// projected. EmptyInputError for zero tiles, ShapeError for a wrong width.
PoolResult abmil_forward(const AbmilParams& params, const num::Tensor& tiles);
num::Tensor gene_embed(const AbmilParams& params, const num::Tensor& genes);

/// Symmetric InfoNCE over row-normalized pairs: the mean of the slide->gene
/// and gene->slide cross-entropies of logits cos / temperature, with the
/// diagonal as positives. BatchError for B < 2, ConfigError for a
/// non-positive temperature.
num::Var tangle_loss(num::Var slide, num::Var gene, double temperature);
double tangle_loss(const num::Tensor& slide, const num::Tensor& gene, double temperature);

/// Mean of the two directions' top-1 matching accuracy under cosine
/// similarity (ties resolve to the lowest index).
double retrieval_top1(const num::Tensor& slide, const num::Tensor& gene);

/// Row mean, 1 x d. EmptyInputError for zero rows.
num::Tensor meanpool_slide(const num::Tensor& tiles);

}  // namespace ticon::agg
