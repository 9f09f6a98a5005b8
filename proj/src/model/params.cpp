// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/model/params.hpp"

#include "ticon/errors.hpp"
#include "ticon/rng.hpp"

namespace ticon::model {

using num::Parameter;
using num::Tensor;

namespace {

constexpr double kInitStd = 0.02;

// Builds tensors into `p`, or only lists their shapes when `shapes` is set.
class Initializer {
 public:
  Initializer(TiconParams& p, std::uint64_t seed) : p_(&p), seed_(seed) {}
  explicit Initializer(std::vector<std::pair<std::string, num::Shape>>& shapes) : shapes_(&shapes) {}

  void weight(const std::string& name, std::size_t in, std::size_t out) {
    if (shapes_) return shape(name, {in, out});
    Rng rng = Rng::stream(seed_, "init/" + name);
    Tensor t = Tensor::matrix(in, out);
    for (double& v : t.data()) v = rng.truncated_normal(kInitStd);
    put(name, std::move(t), true);
  }
  void bias(const std::string& name, std::size_t n) {
    if (shapes_) return shape(name, {1, n});
    put(name, Tensor::matrix(1, n, 0.0), false);
  }
  void linear(const std::string& prefix, std::size_t in, std::size_t out) {
    weight(prefix + ".w", in, out);
    bias(prefix + ".b", out);
  }
  void norm(const std::string& prefix, std::size_t n) {
    if (shapes_) {
      shape(prefix + ".g", {1, n});
      return shape(prefix + ".b", {1, n});
    }
    put(prefix + ".g", Tensor::matrix(1, n, 1.0), false);
    put(prefix + ".b", Tensor::matrix(1, n, 0.0), false);
  }
  void token(const std::string& name, std::size_t n) {
    if (shapes_) return shape(name, {1, n});
    Rng rng = Rng::stream(seed_, "init/" + name);
    Tensor t = Tensor::matrix(1, n);
    for (double& v : t.data()) v = rng.truncated_normal(kInitStd);
    put(name, std::move(t), false);
  }

 private:
  void put(const std::string& name, Tensor t, bool decay) {
    if (p_->tensors.count(name)) throw RegistryError("parameter '" + name + "' already exists");
    p_->tensors.emplace(name, Parameter(name, std::move(t), decay));
  }
  void shape(const std::string& name, num::Shape s) { shapes_->emplace_back(name, std::move(s)); }
  TiconParams* p_ = nullptr;
  std::vector<std::pair<std::string, num::Shape>>* shapes_ = nullptr;
  std::uint64_t seed_ = 0;
};

void init_projector(Initializer& in, const ModelConfig& c, const EncoderDim& e) {
  in.linear("proj." + e.id + ".fc1", e.dim, c.proj_hidden());
  in.linear("proj." + e.id + ".fc2", c.proj_hidden(), c.d_model);
}

void init_head(Initializer& in, const ModelConfig& c, const EncoderDim& e) {
  in.linear("head." + e.id + ".fc1", c.d_model, c.proj_hidden());
  in.linear("head." + e.id + ".fc2", c.proj_hidden(), e.dim);
}

}  // namespace

Parameter& TiconParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RegistryError("no parameter named '" + name + "'");
  return it->second;
}

const Parameter& TiconParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RegistryError("no parameter named '" + name + "'");
  return it->second;
}

std::vector<Parameter*> TiconParams::all() {
  std::vector<Parameter*> out;
  for (auto& [n, p] : tensors) out.push_back(&p);
  return out;
}

std::vector<Parameter*> TiconParams::trainable() {
  std::vector<Parameter*> out;
  for (auto& [n, p] : tensors)
    if (p.trainable) out.push_back(&p);
  return out;
}

std::size_t TiconParams::count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, p] : tensors)
    if (name.rfind(prefix, 0) == 0) n += p.value.size();
  return n;
}

void TiconParams::zero_grad() {
  for (auto& [n, p] : tensors) p.zero_grad();
}

bool operator==(const TiconParams& a, const TiconParams& b) {
  if (!(a.config == b.config) || a.tensors.size() != b.tensors.size()) return false;
  for (auto ia = a.tensors.begin(), ib = b.tensors.begin(); ia != a.tensors.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !(ia->second.value == ib->second.value)) return false;
  }
  return true;
}

namespace {

void build(Initializer& in, const ModelConfig& cfg) {
  const std::size_t d = cfg.d_model, f = cfg.mlp_hidden();
  for (const auto& e : cfg.inputs) init_projector(in, cfg, e);
  for (std::size_t l = 0; l < cfg.encoder_depth; ++l) {
    const std::string b = "enc." + std::to_string(l);
    in.norm(b + ".ln1", d);
    in.linear(b + ".qkv", d, 3 * d);
    in.linear(b + ".out", d, d);
    in.norm(b + ".ln2", d);
    in.linear(b + ".fc1", d, f);
    in.linear(b + ".fc2", f, d);
  }
  in.norm("enc.norm", d);
  in.token("dec.mask_token", d);
  for (std::size_t l = 0; l < cfg.decoder_depth; ++l) {
    const std::string b = "dec." + std::to_string(l);
    if (cfg.decoder_self_attention) {
      in.norm(b + ".ln_sa", d);
      in.linear(b + ".sa_qkv", d, 3 * d);
      in.linear(b + ".sa_out", d, d);
    }
    in.norm(b + ".ln_ca", d);
    in.linear(b + ".ca_q", d, d);
    in.linear(b + ".ca_kv", d, 2 * d);
    in.linear(b + ".ca_out", d, d);
    in.norm(b + ".ln_mlp", d);
    in.linear(b + ".fc1", d, f);
    in.linear(b + ".fc2", f, d);
  }
  in.norm("dec.norm", d);
  for (const auto& e : cfg.targets) init_head(in, cfg, e);
}

}  // namespace

TiconParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TiconParams p;
  p.config = cfg;
  Initializer in(p, seed);
  build(in, cfg);
  return p;
}

std::vector<std::pair<std::string, num::Shape>> parameter_shapes(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, num::Shape>> shapes;
  Initializer in(shapes);
  build(in, cfg);
  return shapes;
}

std::size_t count_parameters(const ModelConfig& cfg, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(cfg))
    if (name.rfind(prefix, 0) == 0) n += num::shape_numel(shape);
  return n;
}

void add_input_projector(TiconParams& p, const EncoderDim& e, std::uint64_t seed) {
  if (p.config.has_input(e.id)) throw RegistryError("encoder '" + e.id + "' already has an input projector");
  Initializer in(p, seed);
  init_projector(in, p.config, e);
  p.config.inputs.push_back(e);
}

void add_output_head(TiconParams& p, const EncoderDim& e, std::uint64_t seed) {
  if (p.config.has_target(e.id)) throw RegistryError("encoder '" + e.id + "' already has an output head");
  Initializer in(p, seed);
  init_head(in, p.config, e);
  p.config.targets.push_back(e);
}

}  // namespace ticon::model
