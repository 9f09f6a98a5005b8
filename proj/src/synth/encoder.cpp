// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/synth/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ticon/binio.hpp"
#include "ticon/errors.hpp"
#include "ticon/rng.hpp"

namespace ticon::synth {

const char* scale_name(Scale s) noexcept { return s == Scale::kFullTile ? "full-tile" : "quadrant"; }

MockEncoderSpec MockEncoderSpec::create(std::string id, std::size_t dim, Scale scale,
                                        std::uint64_t seed, std::size_t latent_dim,
                                        std::size_t hidden) {
  if (dim == 0 || latent_dim == 0 || hidden == 0) throw ConfigError("mock encoder with zero width");
  MockEncoderSpec s;
  s.encoder_id = std::move(id);
  s.dim = dim;
  s.scale = scale;
  s.seed = seed;
  s.latent_dim = latent_dim;
  s.hidden = hidden;
  Rng rng(seed);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  s.w1.resize(hidden * latent_dim);
  for (double& v : s.w1) v = s1 * rng.normal();
  s.b1.resize(hidden);
  for (double& v : s.b1) v = 0.1 * rng.normal();
  s.w2.resize(dim * hidden);
  for (double& v : s.w2) v = s2 * rng.normal();
  s.b2.resize(dim);
  for (double& v : s.b2) v = 0.1 * rng.normal();
  return s;
}

void MockEncoderSpec::apply(std::span<const double> latent, std::span<float> out) const {
  if (latent.size() != latent_dim || out.size() != dim) {
    throw ShapeError("mock encoder " + encoder_id + " expects latent " + std::to_string(latent_dim) +
                     " -> " + std::to_string(dim));
  }
  std::vector<double> h(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    double a = b1[j];
    for (std::size_t k = 0; k < latent_dim; ++k) a += w1[j * latent_dim + k] * latent[k];
    h[j] = std::tanh(a);
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double a = b2[i];
    for (std::size_t j = 0; j < hidden; ++j) a += w2[i * hidden + j] * h[j];
    out[i] = static_cast<float>(a);
  }
}

EncoderRegistry EncoderRegistry::desk_default(std::size_t latent_dim) {
  struct Row {
    const char* id;
    std::size_t dim;
    Scale scale;
    bool unseen;
  };
  static constexpr Row kRows[] = {
      {"enc-a", 48, Scale::kFullTile, false},  {"enc-b", 64, Scale::kQuadrant, false},
      {"enc-c", 96, Scale::kQuadrant, false},  {"unseen-d", 56, Scale::kFullTile, true},
      {"unseen-e", 80, Scale::kQuadrant, true},
  };
  EncoderRegistry reg;
  for (const Row& r : kRows) {
    reg.add(MockEncoderSpec::create(r.id, r.dim, r.scale, stream_seed(0x5EED0E4C, r.id), latent_dim));
    (r.unseen ? reg.unseen_ : reg.pretraining_).emplace_back(r.id);
  }
  return reg;
}

void EncoderRegistry::add(MockEncoderSpec spec) {
  if (contains(spec.encoder_id)) throw RegistryError("duplicate encoder id '" + spec.encoder_id + "'");
  for (const auto& s : specs_)
    if (s.seed == spec.seed) throw RegistryError("encoders must not share a seed");
  specs_.push_back(std::move(spec));
}

const MockEncoderSpec& EncoderRegistry::get(const std::string& id) const {
  for (const auto& s : specs_)
    if (s.encoder_id == id) return s;
  throw RegistryError("unknown encoder id '" + id + "'");
}

bool EncoderRegistry::contains(const std::string& id) const noexcept {
  return std::any_of(specs_.begin(), specs_.end(), [&](const auto& s) { return s.encoder_id == id; });
}

std::vector<std::string> EncoderRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& s : specs_) out.push_back(s.encoder_id);
  return out;
}

std::string EncoderRegistry::digest() const {
  io::ByteWriter w;
  for (const auto& s : specs_) {
    w.str(s.encoder_id);
    w.u64(s.dim);
    w.str(scale_name(s.scale));
    w.u64(s.seed);
    for (const auto* t : {&s.w1, &s.b1, &s.w2, &s.b2})
      for (double v : *t) w.f64(v);
  }
  const auto bytes = w.take();
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", io::crc32(bytes));
  return buf;
}

EmbeddingGrid encode_quadrants(const SyntheticSlide& slide, const MockEncoderSpec& spec) {
  EmbeddingGrid g = EmbeddingGrid::zeros(spec.encoder_id, static_cast<std::uint32_t>(2 * slide.rows),
                                         static_cast<std::uint32_t>(2 * slide.cols),
                                         static_cast<std::uint32_t>(spec.dim));
  for (std::size_t r = 0; r < slide.rows; ++r)
    for (std::size_t c = 0; c < slide.cols; ++c) {
      if (!slide.valid(r, c)) continue;
      for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t fr = 2 * r + q / 2, fc = 2 * c + q % 2;
        spec.apply(slide.quadrant_latent(r, c, q), g.at(fr, fc));
        g.validity[g.index(fr, fc)] = 1;
      }
    }
  return g;
}

EmbeddingGrid encode_tiles(const SyntheticSlide& slide, const MockEncoderSpec& spec) {
  if (spec.scale == Scale::kQuadrant) return pool_quadrants(encode_quadrants(slide, spec));
  EmbeddingGrid g = EmbeddingGrid::zeros(spec.encoder_id, static_cast<std::uint32_t>(slide.rows),
                                         static_cast<std::uint32_t>(slide.cols),
                                         static_cast<std::uint32_t>(spec.dim));
  for (std::size_t r = 0; r < slide.rows; ++r)
    for (std::size_t c = 0; c < slide.cols; ++c) {
      if (!slide.valid(r, c)) continue;
      spec.apply(slide.latent(r, c), g.at(r, c));
      g.validity[g.index(r, c)] = 1;
    }
  return g;
}

EmbeddingGrid encode_tiles(const SyntheticSlide& slide, const EncoderRegistry& reg,
                           const std::string& encoder_id) {
  return encode_tiles(slide, reg.get(encoder_id));
}

}  // namespace ticon::synth
