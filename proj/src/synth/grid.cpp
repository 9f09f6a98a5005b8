// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/synth/grid.hpp"

#include <algorithm>

#include "ticon/binio.hpp"
#include "ticon/errors.hpp"

namespace ticon::synth {

namespace {
constexpr char kMagic[4] = {'T', 'E', 'G', '1'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

EmbeddingGrid EmbeddingGrid::zeros(std::string id, std::uint32_t rows, std::uint32_t cols,
                                   std::uint32_t dim) {
  EmbeddingGrid g;
  g.encoder_id = std::move(id);
  g.rows = rows;
  g.cols = cols;
  g.dim = dim;
  g.embeddings.assign(static_cast<std::size_t>(rows) * cols * dim, 0.0f);
  g.validity.assign(static_cast<std::size_t>(rows) * cols, 0);
  return g;
}

std::size_t EmbeddingGrid::num_valid() const noexcept {
  return static_cast<std::size_t>(std::count_if(validity.begin(), validity.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

void EmbeddingGrid::check_invariants() const {
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;
  if (validity.size() != cells || embeddings.size() != cells * dim) {
    throw ShapeError("embedding grid buffers do not match extents " + std::to_string(rows) + "x" +
                     std::to_string(cols) + "x" + std::to_string(dim));
  }
  for (std::size_t i = 0; i < cells; ++i) {
    if (validity[i]) continue;
    for (std::size_t k = 0; k < dim; ++k) {
      if (embeddings[i * dim + k] != 0.0f) {
        throw ShapeError("invalid grid position " + std::to_string(i) +
                         " holds a non-zero embedding");
      }
    }
  }
}

EmbeddingGrid pool_quadrants(const EmbeddingGrid& fine) {
  if (fine.rows % 2 != 0 || fine.cols % 2 != 0) {
    throw ShapeError("pool_quadrants: fine grid extents " + std::to_string(fine.rows) + "x" +
                     std::to_string(fine.cols) + " are not even");
  }
  EmbeddingGrid out = EmbeddingGrid::zeros(fine.encoder_id, fine.rows / 2, fine.cols / 2, fine.dim);
  out.origin_row = fine.origin_row / 2;
  out.origin_col = fine.origin_col / 2;
  std::vector<double> acc(fine.dim);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      const bool all_valid = fine.valid(2 * r, 2 * c) && fine.valid(2 * r, 2 * c + 1) &&
                             fine.valid(2 * r + 1, 2 * c) && fine.valid(2 * r + 1, 2 * c + 1);
      if (!all_valid) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t dr = 0; dr < 2; ++dr)
        for (std::size_t dc = 0; dc < 2; ++dc) {
          auto e = fine.at(2 * r + dr, 2 * c + dc);
          for (std::size_t k = 0; k < fine.dim; ++k) acc[k] += e[k];
        }
      auto dst = out.at(r, c);
      for (std::size_t k = 0; k < fine.dim; ++k) dst[k] = static_cast<float>(acc[k] * 0.25);
      out.validity[out.index(r, c)] = 1;
    }
  }
  return out;
}

EmbeddingGrid crop(const EmbeddingGrid& grid, std::size_t row, std::size_t col, std::size_t h,
                   std::size_t w) {
  if (row + h > grid.rows || col + w > grid.cols) {
    throw ShapeError("crop window exceeds grid extents");
  }
  EmbeddingGrid out = EmbeddingGrid::zeros(grid.encoder_id, static_cast<std::uint32_t>(h),
                                           static_cast<std::uint32_t>(w), grid.dim);
  out.origin_row = grid.origin_row + static_cast<std::int32_t>(row);
  out.origin_col = grid.origin_col + static_cast<std::int32_t>(col);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      out.validity[out.index(r, c)] = grid.validity[grid.index(row + r, col + c)];
      auto src = grid.at(row + r, col + c);
      std::copy(src.begin(), src.end(), out.at(r, c).begin());
    }
  }
  return out;
}

std::vector<std::uint8_t> serialize_grid(const EmbeddingGrid& grid) {
  grid.check_invariants();
  if (grid.encoder_id.size() > 255) throw ShapeError("encoder id longer than 255 bytes");
  io::ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.u32(grid.rows);
  w.u32(grid.cols);
  w.u32(grid.dim);
  w.u8(static_cast<std::uint8_t>(grid.encoder_id.size()));
  w.str(grid.encoder_id);
  w.i32(grid.origin_row);
  w.i32(grid.origin_col);
  const std::size_t cells = static_cast<std::size_t>(grid.rows) * grid.cols;
  std::vector<std::uint8_t> bitmap((cells + 7) / 8, 0);
  for (std::size_t i = 0; i < cells; ++i)
    if (grid.validity[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  w.bytes(bitmap);
  for (float v : grid.embeddings) w.f32(v);
  w.seal_crc();
  return w.take();
}

EmbeddingGrid parse_grid(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.str(4) != std::string_view(kMagic, 4)) throw FormatError("bad TEG1 magic", 0);
  const std::size_t version_at = r.offset();
  if (r.u16() != kVersion) throw FormatError("unsupported TEG1 version", version_at);
  EmbeddingGrid g;
  g.rows = r.u32();
  g.cols = r.u32();
  g.dim = r.u32();
  g.encoder_id = r.str(r.u8());
  g.origin_row = r.i32();
  g.origin_col = r.i32();
  const std::uint64_t cells = static_cast<std::uint64_t>(g.rows) * g.cols;
  const std::size_t bitmap_at = r.offset();
  if ((cells + 7) / 8 > r.remaining()) throw FormatError("validity bitmap truncated", bitmap_at);
  auto bitmap = r.bytes(static_cast<std::size_t>((cells + 7) / 8));
  const std::size_t payload_at = r.offset();
  if (g.dim > r.remaining()) {
    throw FormatError("header declares an embedding width larger than the payload", payload_at);
  }
  const std::uint64_t payload_bytes = cells * g.dim * 4;
  if (payload_bytes + 4 > r.remaining()) {
    throw FormatError("header declares " + std::to_string(cells * g.dim) +
                          " floats but the payload is shorter",
                      payload_at);
  }
  if (payload_bytes + 4 < r.remaining()) {
    throw FormatError("trailing bytes after TEG1 payload", payload_at + payload_bytes + 4);
  }
  io::verify_crc(bytes);
  g.validity.resize(static_cast<std::size_t>(cells));
  for (std::size_t i = 0; i < cells; ++i) g.validity[i] = (bitmap[i / 8] >> (i % 8)) & 1u;
  g.embeddings.resize(static_cast<std::size_t>(cells * g.dim));
  for (float& v : g.embeddings) v = r.f32();
  return g;
}

void write_grid(const EmbeddingGrid& grid, const std::filesystem::path& path) {
  io::write_file(path, serialize_grid(grid));
}

EmbeddingGrid read_grid(const std::filesystem::path& path) { return parse_grid(io::read_file(path)); }

}  // namespace ticon::synth
