// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/model/checkpoint.hpp"

#include <cstdio>
#include <limits>
#include <set>

#include "ticon/binio.hpp"
#include "ticon/errors.hpp"

namespace ticon::ckpt {

namespace {
constexpr char kMagic[4] = {'T', 'C', 'K', '1'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

const num::Tensor* Container::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.value;
  return nullptr;
}

std::vector<std::uint8_t> serialize(const Container& c, DType dtype) {
  const std::size_t width = static_cast<std::size_t>(dtype);
  io::ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u32(static_cast<std::uint32_t>(c.config.size()));
  w.str(c.config);
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) throw ShapeError("tensor name too long");
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.str(t.name);
    w.u8(static_cast<std::uint8_t>(t.value.rank()));
    for (std::size_t e : t.value.shape()) w.u32(static_cast<std::uint32_t>(e));
    w.u64(offset);
    offset += t.value.size() * width;
  }
  for (const auto& t : c.tensors) {
    for (double v : t.value.data()) {
      if (dtype == DType::kF32) {
        w.f32(static_cast<float>(v));
      } else {
        w.f64(v);
      }
    }
  }
  w.seal_crc();
  return w.take();
}

Container parse(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.str(4) != std::string_view(kMagic, 4)) throw FormatError("bad TCK1 magic", 0);
  const std::size_t version_at = r.offset();
  if (r.u16() != kVersion) throw FormatError("unsupported TCK1 version", version_at);
  const std::size_t dtype_at = r.offset();
  const std::uint8_t dt = r.u8();
  if (dt != 4 && dt != 8) throw FormatError("unknown TCK1 dtype " + std::to_string(dt), dtype_at);
  Container c;
  const std::size_t config_at = r.offset();
  const std::uint32_t config_len = r.u32();
  if (config_len > r.remaining()) throw FormatError("config block runs past the end of the file", config_at);
  c.config = r.str(config_len);
  const std::uint32_t count = r.u32();
  struct Manifest {
    std::string name;
    num::Shape shape;
    std::uint64_t offset;
    std::size_t at;
  };
  std::vector<Manifest> manifest;
  std::uint64_t expected_offset = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Manifest m;
    m.at = r.offset();
    m.name = r.str(r.u16());
    const std::uint8_t rank = r.u8();
    for (std::uint8_t k = 0; k < rank; ++k) m.shape.push_back(r.u32());
    m.offset = r.u64();
    if (m.offset != expected_offset) throw FormatError("tensor '" + m.name + "' has an inconsistent offset", m.at);
    expected_offset += num::shape_numel(m.shape) * dt;
    manifest.push_back(std::move(m));
  }
  const std::size_t payload_at = r.offset();
  if (expected_offset + 4 > r.remaining()) {
    throw FormatError("manifest declares " + std::to_string(expected_offset) + " payload bytes but the file is shorter",
                      payload_at);
  }
  if (expected_offset + 4 < r.remaining()) throw FormatError("trailing bytes after TCK1 payload", payload_at + expected_offset + 4);
  io::verify_crc(bytes);
  for (const auto& m : manifest) {
    num::Tensor t(m.shape, 0.0);
    for (double& v : t.data()) v = dt == 4 ? static_cast<double>(r.f32()) : r.f64();
    c.tensors.push_back({m.name, std::move(t)});
  }
  return c;
}

void save(const Container& c, const std::filesystem::path& path, DType dtype) {
  io::write_file(path, serialize(c, dtype));
}

Container load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string content_hash(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ticon::ckpt

namespace ticon::model {

ckpt::Container to_container(const TiconParams& params, const KvText& meta) {
  KvText kv;
  params.config.write(kv);
  for (const auto& [k, v] : meta.entries()) kv.set(k, v);
  ckpt::Container c;
  c.config = kv.render();
  for (const auto& [name, p] : params.tensors) c.tensors.push_back({name, p.value});
  return c;
}

TiconParams params_from_container(const ckpt::Container& c) {
  const KvText kv = KvText::parse(c.config);
  TiconParams params;
  params.config = ModelConfig::read(kv);
  std::set<std::string> expected;
  for (const auto& [name, shape] : parameter_shapes(params.config)) {
    expected.insert(name);
    const num::Tensor* t = c.find(name);
    if (!t) throw FormatError("checkpoint lacks tensor '" + name + "' required by its config", 0);
    if (t->shape() != shape) {
      throw FormatError("tensor '" + name + "' has shape " + num::shape_string(t->shape()) + ", config implies " +
                            num::shape_string(shape),
                        0);
    }
  }
  // Decay flags mirror init_params: only weight matrices decay.
  for (const auto& e : c.tensors) {
    if (e.name.rfind("opt.", 0) == 0) continue;
    if (!expected.count(e.name)) throw FormatError("checkpoint tensor '" + e.name + "' is not implied by its config", 0);
    const bool decay = e.name.size() > 2 && e.name.compare(e.name.size() - 2, 2, ".w") == 0;
    params.tensors.emplace(e.name, num::Parameter(e.name, e.value, decay));
  }
  return params;
}

void save_model(const TiconParams& params, const std::filesystem::path& path, const KvText& meta) {
  ckpt::save(to_container(params, meta), path);
}

TiconParams load_model(const std::filesystem::path& path) { return params_from_container(ckpt::load(path)); }

}  // namespace ticon::model
