// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ticon/model/config.hpp"
#include "ticon/numerics/tape.hpp"

namespace ticon::model {

/// All learnable tensors of a TICON model, keyed by name:
///
///   proj.<id>.fc{1,2}.{w,b}         input projector rho_i (d_i -> hidden -> D)
///   enc.<l>.{ln1,ln2}.{g,b}         pre-norm scales/shifts
///   enc.<l>.qkv.{w,b}, enc.<l>.out.{w,b}, enc.<l>.fc{1,2}.{w,b}
///   enc.norm.{g,b}                  final encoder norm
///   dec.mask_token                  mu, 1 x D
///   dec.<l>.{ln_sa,ln_ca,ln_mlp}.{g,b}
///   dec.<l>.sa_qkv / sa_out         (only with decoder self-attention)
///   dec.<l>.ca_q / ca_kv / ca_out, dec.<l>.fc{1,2}
///   dec.norm.{g,b}
///   head.<id>.fc{1,2}.{w,b}         output head psi_j (D -> hidden -> d_j)
///
/// Weights are stored [in, out]. The map is ordered, so iteration order (and
/// therefore checkpoint and optimizer order) is the sorted name order.
struct TiconParams {
  ModelConfig config;
  std::map<std::string, num::Parameter> tensors;

  num::Parameter& at(const std::string& name);
  const num::Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors.count(name) != 0; }

  std::vector<num::Parameter*> all();
  std::vector<num::Parameter*> trainable();
  /// Total element count of tensors whose name starts with `prefix`.
  std::size_t count(const std::string& prefix = "") const;
  std::size_t encoder_count() const { return count("enc."); }
  std::size_t decoder_count() const { return count("dec."); }
  void zero_grad();

  friend bool operator==(const TiconParams& a, const TiconParams& b);
};

/// Weights ~ truncated normal (std 0.02, |x| <= 0.04), biases 0, norm scales 1,
/// mask token ~ truncated normal. Each tensor draws from its own named
/// sub-stream of `seed`, so adding a projector later does not perturb the rest.
TiconParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Names and shapes init_params would create, without allocating them.
std::vector<std::pair<std::string, num::Shape>> parameter_shapes(const ModelConfig& cfg);
std::size_t count_parameters(const ModelConfig& cfg, const std::string& prefix = "");

/// Adds rho_i / psi_j for a new encoder (and records it in the config).
/// Throws RegistryError if already present.
void add_input_projector(TiconParams& p, const EncoderDim& e, std::uint64_t seed);
void add_output_head(TiconParams& p, const EncoderDim& e, std::uint64_t seed);

}  // namespace ticon::model
