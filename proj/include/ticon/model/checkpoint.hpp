// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ticon/kvtext.hpp"
#include "ticon/model/params.hpp"
#include "ticon/numerics/tensor.hpp"

namespace ticon::ckpt {

enum class DType : std::uint8_t { kF32 = 4, kF64 = 8 };

struct TensorEntry {
  std::string name;
  num::Tensor value;
};

/// TCK1 container (little-endian):
///   "TCK1" | u16 version=1 | u8 dtype (4 = f32, 8 = f64) |
///   u32 config_len | config text |
///   u32 count | count x (u16 name_len | name | u8 rank | rank x u32 extent |
///                        u64 byte offset into payload) |
///   payload | u32 CRC32 of everything before it.
struct Container {
  std::string config;
  std::vector<TensorEntry> tensors;

  const num::Tensor* find(const std::string& name) const;
};

std::vector<std::uint8_t> serialize(const Container& c, DType dtype = DType::kF32);
/// Throws FormatError with the offset of the first inconsistency.
Container parse(std::span<const std::uint8_t> bytes);
void save(const Container& c, const std::filesystem::path& path, DType dtype = DType::kF32);
Container load(const std::filesystem::path& path);

/// 16-hex-digit FNV-1a content hash, used to label checkpoints in output
/// directories.
std::string content_hash(std::span<const std::uint8_t> bytes);

}  // namespace ticon::ckpt

namespace ticon::model {

/// Container holding the model config (section [model]), the extra metadata
/// in `meta`, and every parameter tensor under its own name.
ckpt::Container to_container(const TiconParams& params, const KvText& meta = {});

/// Rebuilds parameters, checking the manifest against the config: every
/// tensor the config implies must be present with the right shape and no
/// other model tensor may appear (names under "opt." are ignored). A mismatch
/// is a FormatError.
TiconParams params_from_container(const ckpt::Container& c);

void save_model(const TiconParams& params, const std::filesystem::path& path, const KvText& meta = {});
TiconParams load_model(const std::filesystem::path& path);

}  // namespace ticon::model
