// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ticon/synth/grid.hpp"
#include "ticon/synth/slide.hpp"

namespace ticon::synth {

enum class Scale { kFullTile, kQuadrant };

const char* scale_name(Scale s) noexcept;

/// Frozen mock tile encoder: e = W2 tanh(W1 x + b1) + b2 with hidden width
/// `hidden`. Weights are generated from `seed` and never trained.
struct MockEncoderSpec {
  std::string encoder_id;
  std::size_t dim = 0;
  Scale scale = Scale::kFullTile;
  std::uint64_t seed = 0;
  std::size_t latent_dim = 0;
  std::size_t hidden = 64;
  std::vector<double> w1, b1, w2, b2;  // hidden x L, hidden, dim x hidden, dim

  static MockEncoderSpec create(std::string id, std::size_t dim, Scale scale, std::uint64_t seed,
                                std::size_t latent_dim, std::size_t hidden = 64);

  /// Writes `dim` floats for one latent vector of length `latent_dim`.
  void apply(std::span<const double> latent, std::span<float> out) const;
};

class EncoderRegistry {
 public:
  /// enc-a/enc-b/enc-c for pretraining (48, 64, 96 dims) and unseen-d/unseen-e
  /// held out for adaptation (56, 80 dims).
  static EncoderRegistry desk_default(std::size_t latent_dim = 16);

  void add(MockEncoderSpec spec);
  const MockEncoderSpec& get(const std::string& id) const;
  bool contains(const std::string& id) const noexcept;
  std::size_t dim(const std::string& id) const { return get(id).dim; }

  const std::vector<MockEncoderSpec>& specs() const noexcept { return specs_; }
  std::vector<std::string> ids() const;
  const std::vector<std::string>& pretraining_ids() const noexcept { return pretraining_; }
  const std::vector<std::string>& unseen_ids() const noexcept { return unseen_; }

  /// Hex CRC32 over the canonical (id, dim, scale, seed, weights) listing.
  std::string digest() const;

 private:
  std::vector<MockEncoderSpec> specs_;
  std::vector<std::string> pretraining_;
  std::vector<std::string> unseen_;
};

/// M x N grid for `spec`. Quadrant-scale encoders embed the four quadrant
/// latents of each tile and average them (pool_quadrants).
EmbeddingGrid encode_tiles(const SyntheticSlide& slide, const MockEncoderSpec& spec);
EmbeddingGrid encode_tiles(const SyntheticSlide& slide, const EncoderRegistry& reg,
                           const std::string& encoder_id);

/// 2M x 2N grid of per-quadrant embeddings (before pooling).
EmbeddingGrid encode_quadrants(const SyntheticSlide& slide, const MockEncoderSpec& spec);

}  // namespace ticon::synth
