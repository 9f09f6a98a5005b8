// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ticon::synth {

/// Generator settings for synthetic slides.
///
/// Region labels come from an i.i.d. field on a coarse lattice of
/// `region_block`-sized cells (randomly offset per slide), perturbed by
/// per-tile label noise and cleaned by three rounds of 4-neighbourhood
/// majority smoothing.
///
/// Tile classes: for a region r outside the alias pair, every tile has class
/// r. Inside the two aliased regions (a, b), a tile is a *marker* with
/// probability `marker_fraction` (class R for region a, R+1 for region b)
/// and otherwise carries the region's own class, whose latent is drawn from
/// one distribution shared by a and b. Classes a and b are therefore
/// indistinguishable from a single tile; only neighbouring markers reveal the
/// region.
///
/// Class prototypes and the gene/spot response matrices derive from
/// `world_seed`, so all slides of one world share them.
struct SynthConfig {
  std::size_t rows = 12;
  std::size_t cols = 12;
  std::size_t regions = 4;
  std::size_t latent_dim = 16;
  std::size_t genes = 32;
  std::size_t spot_genes = 16;
  std::pair<std::size_t, std::size_t> alias_pair{0, 1};
  double background_fraction = 0.0;
  double marker_fraction = 0.5;
  std::size_t region_block = 16;
  double region_noise = 0.25;
  double class_separation = 4.0;
  double latent_noise = 0.3;
  double quadrant_jitter = 0.25;
  double gene_noise = 0.05;
  std::uint64_t world_seed = 0x7143C0DEull;

  /// Throws ConfigError for degenerate settings.
  void validate() const;
  std::size_t num_tile_classes() const noexcept { return regions + 2; }
  std::size_t marker_class(std::size_t alias_index) const noexcept { return regions + alias_index; }
  bool is_aliased_class(int c) const noexcept {
    return c == static_cast<int>(alias_pair.first) || c == static_cast<int>(alias_pair.second);
  }
};

struct SyntheticSlide {
  std::uint64_t seed = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t latent_dim = 0;
  std::vector<int> region_labels;       // rows * cols
  std::vector<int> tile_labels;         // rows * cols, -1 on background
  std::vector<std::uint8_t> validity;   // rows * cols
  std::vector<double> tile_latents;     // rows * cols * L, zero on background
  std::vector<double> quadrant_latents; // (2 rows) * (2 cols) * L
  std::vector<double> spot_expression;  // rows * cols * spot_genes, zero on background
  std::size_t spot_genes = 0;
  int slide_label = 0;
  std::vector<double> gene_vector;

  std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * cols + c; }
  bool valid(std::size_t r, std::size_t c) const noexcept { return validity[index(r, c)] != 0; }
  std::span<const double> latent(std::size_t r, std::size_t c) const noexcept {
    return {tile_latents.data() + index(r, c) * latent_dim, latent_dim};
  }
  /// Quadrant q in {0,1,2,3} = (top-left, top-right, bottom-left, bottom-right).
  std::span<const double> quadrant_latent(std::size_t r, std::size_t c, std::size_t q) const noexcept;
  std::span<const double> spot(std::size_t r, std::size_t c) const noexcept {
    return {spot_expression.data() + index(r, c) * spot_genes, spot_genes};
  }
  std::size_t num_valid() const noexcept;

  friend bool operator==(const SyntheticSlide&, const SyntheticSlide&) = default;
};

SyntheticSlide generate_slide(std::uint64_t seed, const SynthConfig& cfg);

/// Fraction of horizontally/vertically adjacent tile pairs with equal region labels.
double neighbour_agreement(const SyntheticSlide& slide);

/// Latent mean of each tile class, (R+2) rows of length L. The two aliased
/// classes share one row.
std::vector<std::vector<double>> class_prototypes(const SynthConfig& cfg);

}  // namespace ticon::synth
