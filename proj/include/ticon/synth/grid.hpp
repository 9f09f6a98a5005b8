// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ticon::synth {

/// M x N grid of d-dimensional tile embeddings from one encoder.
///
/// Invalid (background) positions hold all-zero embeddings. Embeddings are
/// stored in 32-bit floats, the on-disk precision.
struct EmbeddingGrid {
  std::string encoder_id;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t dim = 0;
  std::vector<float> embeddings;       // rows * cols * dim, row-major
  std::vector<std::uint8_t> validity;  // rows * cols, 0 or 1
  std::int32_t origin_row = 0;
  std::int32_t origin_col = 0;

  static EmbeddingGrid zeros(std::string id, std::uint32_t rows, std::uint32_t cols,
                             std::uint32_t dim);

  std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * cols + c; }
  bool valid(std::size_t r, std::size_t c) const noexcept { return validity[index(r, c)] != 0; }
  std::span<float> at(std::size_t r, std::size_t c) noexcept {
    return {embeddings.data() + index(r, c) * dim, dim};
  }
  std::span<const float> at(std::size_t r, std::size_t c) const noexcept {
    return {embeddings.data() + index(r, c) * dim, dim};
  }
  std::size_t num_valid() const noexcept;

  /// Throws ShapeError when buffer sizes disagree with the extents or an
  /// invalid position carries a non-zero embedding.
  void check_invariants() const;

  friend bool operator==(const EmbeddingGrid&, const EmbeddingGrid&) = default;
};

/// Averages each 2x2 block of a fine grid into one coarse cell. A coarse cell
/// is valid only if all four of its fine cells are valid.
EmbeddingGrid pool_quadrants(const EmbeddingGrid& fine);

/// Sub-window [row, row+h) x [col, col+w). The result's origin is the
/// parent's origin plus (row, col).
EmbeddingGrid crop(const EmbeddingGrid& grid, std::size_t row, std::size_t col, std::size_t h,
                   std::size_t w);

/// TEG1 binary encoding (little-endian):
///   "TEG1" | u16 version=1 | u32 M | u32 N | u32 d | u8 id_len | id bytes |
///   i32 origin_row | i32 origin_col | validity bitmap ceil(M*N/8) bytes,
///   row-major, LSB-first | M*N*d f32 | u32 CRC32 of everything before it.
std::vector<std::uint8_t> serialize_grid(const EmbeddingGrid& grid);
/// Throws FormatError with the byte offset of the first inconsistency.
EmbeddingGrid parse_grid(std::span<const std::uint8_t> bytes);

void write_grid(const EmbeddingGrid& grid, const std::filesystem::path& path);
EmbeddingGrid read_grid(const std::filesystem::path& path);

}  // namespace ticon::synth
