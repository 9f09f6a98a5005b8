// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/model/config.hpp"

#include <cmath>
#include <set>

#include "ticon/errors.hpp"
#include "ticon/synth/encoder.hpp"

namespace ticon::model {

void ModelConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) + ") must be a positive multiple of heads (" +
                      std::to_string(heads) + ")");
  }
  if (encoder_depth < 1 || decoder_depth < 1) throw ConfigError("encoder and decoder depth must be >= 1");
  if (!(mlp_ratio > 0.0) || mlp_hidden() == 0) throw ConfigError("mlp_ratio must be positive");
  if (inputs.empty() || targets.empty()) throw ConfigError("model needs at least one input and one target encoder");
  for (const auto* list : {&inputs, &targets}) {
    std::set<std::string> seen;
    for (const auto& e : *list) {
      if (e.id.empty() || e.dim == 0) throw ConfigError("encoder entries need an id and a positive dim");
      if (!seen.insert(e.id).second) throw ConfigError("duplicate encoder id '" + e.id + "'");
    }
  }
  for (const auto& i : inputs)
    for (const auto& t : targets)
      if (i.id == t.id && i.dim != t.dim) throw ConfigError("encoder '" + i.id + "' has two different dims");
}

std::size_t ModelConfig::mlp_hidden() const noexcept {
  return static_cast<std::size_t>(std::llround(mlp_ratio * static_cast<double>(d_model)));
}

bool ModelConfig::has_input(std::string_view id) const noexcept {
  for (const auto& e : inputs)
    if (e.id == id) return true;
  return false;
}

bool ModelConfig::has_target(std::string_view id) const noexcept {
  for (const auto& e : targets)
    if (e.id == id) return true;
  return false;
}

std::size_t ModelConfig::input_dim(std::string_view id) const {
  for (const auto& e : inputs)
    if (e.id == id) return e.dim;
  throw RegistryError("model has no input projector for encoder '" + std::string(id) + "'");
}

std::size_t ModelConfig::target_dim(std::string_view id) const {
  for (const auto& e : targets)
    if (e.id == id) return e.dim;
  throw RegistryError("model has no output head for encoder '" + std::string(id) + "'");
}

ModelConfig ModelConfig::desk_default(const synth::EncoderRegistry& reg) {
  ModelConfig c;
  for (const auto& id : reg.pretraining_ids()) {
    c.inputs.push_back({id, reg.dim(id)});
    c.targets.push_back({id, reg.dim(id)});
  }
  return c;
}

ModelConfig ModelConfig::paper_preset() {
  ModelConfig c;
  c.d_model = 1536;
  c.encoder_depth = 6;
  c.decoder_depth = 1;
  c.heads = 16;
  c.decoder_self_attention = false;
  c.inputs = {{"h-optimus-1", 1536}, {"uni2-h", 1536}, {"conch-v1.5", 768}};
  c.targets = c.inputs;
  return c;
}

void ModelConfig::write(KvText& kv, const std::string& s) const {
  kv.set(s + ".d_model", d_model);
  kv.set(s + ".encoder_depth", encoder_depth);
  kv.set(s + ".decoder_depth", decoder_depth);
  kv.set(s + ".heads", heads);
  kv.set(s + ".mlp_ratio", mlp_ratio);
  kv.set(s + ".projector_hidden", projector_hidden);
  kv.set(s + ".decoder_self_attention", decoder_self_attention);
  for (const auto& e : inputs) kv.set(s + ".input." + e.id, e.dim);
  for (const auto& e : targets) kv.set(s + ".target." + e.id, e.dim);
}

ModelConfig ModelConfig::read(const KvText& kv, const std::string& s) {
  ModelConfig c;
  c.d_model = kv.get_u64_or(s + ".d_model", c.d_model);
  c.encoder_depth = kv.get_u64_or(s + ".encoder_depth", c.encoder_depth);
  c.decoder_depth = kv.get_u64_or(s + ".decoder_depth", c.decoder_depth);
  c.heads = kv.get_u64_or(s + ".heads", c.heads);
  c.mlp_ratio = kv.get_double_or(s + ".mlp_ratio", c.mlp_ratio);
  c.projector_hidden = kv.get_u64_or(s + ".projector_hidden", c.projector_hidden);
  c.decoder_self_attention = kv.get_bool_or(s + ".decoder_self_attention", c.decoder_self_attention);
  for (const auto& id : kv.keys_under(s + ".input")) c.inputs.push_back({id, kv.get_u64(s + ".input." + id)});
  for (const auto& id : kv.keys_under(s + ".target")) c.targets.push_back({id, kv.get_u64(s + ".target." + id)});
  c.validate();
  return c;
}

std::string ModelConfig::to_text() const {
  KvText kv;
  write(kv);
  return kv.render();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  const KvText kv = KvText::parse(text);
  ModelConfig c = read(kv);
  kv.reject_unconsumed();
  return c;
}

}  // namespace ticon::model
