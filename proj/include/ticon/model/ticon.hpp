// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ticon/model/params.hpp"
#include "ticon/numerics/tape.hpp"
#include "ticon/synth/grid.hpp"

namespace ticon::model {

struct GridPos {
  std::int32_t row = 0;
  std::int32_t col = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

/// Head slope 2^(-8(h+1)/H).
double alibi_slope(std::size_t head, std::size_t heads);
/// -slope(h) * (|row_a - row_b| + |col_a - col_b|).
double alibi_bias(std::size_t head, GridPos a, GridPos b, std::size_t heads);

/// Tokens of one or more independent sequences packed into one matrix. Tokens
/// attend only within their own group (cross-group logits are -inf, so they
/// receive exactly zero weight); a single sequence has all groups 0.
struct TokenLayout {
  std::vector<GridPos> pos;
  std::vector<std::uint32_t> group;

  static TokenLayout single(std::vector<GridPos> pos);
  std::size_t size() const noexcept { return pos.size(); }
};

/// Per-head additive attention bias between query and key layouts.
std::vector<num::Tensor> attention_biases(const TokenLayout& q, const TokenLayout& k, std::size_t heads);

/// Tape-level network. Parameters are bound through `tape.param`, so
/// gradients reach every trainable tensor when the tape records gradients.
class TiconNet {
 public:
  TiconNet(num::Tape& tape, TiconParams& params) : tape_(tape), params_(params) {}

  /// rho_i then the l encoder blocks and the final norm. `x` is n x d_i.
  num::Var encode(const std::string& input_id, num::Var x, const TokenLayout& layout);
  /// Mask tokens at `pred`, decoder block(s) over the context, then psi_j for
  /// every id in `targets`. Returns |pred| x d_j per target.
  std::map<std::string, num::Var> decode(num::Var ctx, const TokenLayout& ctx_layout, const TokenLayout& pred,
                                         const std::vector<std::string>& targets);

  num::Var p(const std::string& name);

 private:
  num::Var linear(const std::string& prefix, num::Var x);
  num::Var norm(const std::string& prefix, num::Var x);
  num::Var mlp(const std::string& prefix, num::Var x);
  num::Var attend(num::Var q, num::Var k, num::Var v, const std::vector<num::Tensor>& biases);

  num::Tape& tape_;
  TiconParams& params_;
  std::map<std::string, num::Var> bound_;
};

struct ContextOutput {
  num::Tensor e_ctx;  // n x D
  std::vector<GridPos> positions;
};

/// Inference-mode encode over one sequence of visible tokens (no gradients).
/// Throws RegistryError for an unknown encoder, EmptyInputError for no
/// tokens, ShapeError when the width is not d_i.
ContextOutput encode(const TiconParams& params, const std::string& input_id, const num::Tensor& embeddings,
                     const std::vector<GridPos>& positions);

/// Inference-mode prediction at `pred` for each target id.
std::map<std::string, num::Tensor> decode_predict(const TiconParams& params, const ContextOutput& ctx,
                                                  const std::vector<GridPos>& pred,
                                                  const std::vector<std::string>& targets);

/// Full-grid contextualization: every valid tile attends to every valid tile.
/// Output grid has dim D, zeros at invalid positions, encoder id
/// "ticon/<input_id>", and the input's origin. Any grid size is accepted.
synth::EmbeddingGrid contextualize(const TiconParams& params, const std::string& input_id,
                                   const synth::EmbeddingGrid& grid);
/// Same computation, returning the n_valid x D outputs in 64-bit, rows in
/// row-major grid order of the valid tiles.
num::Tensor contextualize_valid(const TiconParams& params, const std::string& input_id,
                                const synth::EmbeddingGrid& grid);

/// The network applied to a single tile (a sequence of length one).
num::Tensor contextualize_isolated(const TiconParams& params, const std::string& input_id,
                                   std::span<const float> embedding);
/// Row-wise isolated contextualization of n tiles in one pass (each tile its
/// own sequence).
num::Tensor contextualize_isolated_batch(const TiconParams& params, const std::string& input_id,
                                         const num::Tensor& embeddings);

/// Rows of the valid tiles of `grid` (row-major order), as 64-bit.
num::Tensor valid_rows(const synth::EmbeddingGrid& grid);
std::vector<GridPos> valid_positions(const synth::EmbeddingGrid& grid);

}  // namespace ticon::model
