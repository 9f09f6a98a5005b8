// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ticon/kvtext.hpp"

namespace ticon::synth {
class EncoderRegistry;
}

namespace ticon::model {

struct EncoderDim {
  std::string id;
  std::size_t dim = 0;
  friend bool operator==(const EncoderDim&, const EncoderDim&) = default;
};

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t encoder_depth = 4;
  std::size_t decoder_depth = 1;
  std::size_t heads = 4;
  double mlp_ratio = 4.0;
  std::size_t projector_hidden = 0;  // 0: use d_model
  /// Mask tokens attend to each other before cross-attending.
  bool decoder_self_attention = true;
  std::vector<EncoderDim> inputs;   // one projector rho_i each
  std::vector<EncoderDim> targets;  // one head psi_j each

  /// Throws ConfigError.
  void validate() const;

  std::size_t head_dim() const noexcept { return d_model / heads; }
  std::size_t mlp_hidden() const noexcept;
  std::size_t proj_hidden() const noexcept { return projector_hidden ? projector_hidden : d_model; }
  bool has_input(std::string_view id) const noexcept;
  bool has_target(std::string_view id) const noexcept;
  std::size_t input_dim(std::string_view id) const;   // RegistryError if absent
  std::size_t target_dim(std::string_view id) const;  // RegistryError if absent

  /// D=64, l=4, decoder 1 block, H=4; inputs and targets are the registry's
  /// pretraining encoders.
  static ModelConfig desk_default(const synth::EncoderRegistry& reg);
  /// D=1536, l=6, one cross-attention decoder block, with the three 1536/1536/768
  /// dimensional pretraining encoders. For parameter counting only.
  static ModelConfig paper_preset();

  void write(KvText& kv, const std::string& section = "model") const;
  static ModelConfig read(const KvText& kv, const std::string& section = "model");
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace ticon::model
