// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/synth/slide.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ticon/errors.hpp"
#include "ticon/rng.hpp"

namespace ticon::synth {

void SynthConfig::validate() const {
  if (rows < 4 || cols < 4) throw ConfigError("slides need at least 4 x 4 tiles");
  if (regions < 3) throw ConfigError("at least 3 region classes are required (alias pair + one)");
  if (alias_pair.first >= regions || alias_pair.second >= regions ||
      alias_pair.first == alias_pair.second) {
    throw ConfigError("alias_pair must name two distinct region classes");
  }
  if (latent_dim == 0 || genes == 0 || spot_genes == 0) throw ConfigError("zero-width latent or gene space");
  if (!(background_fraction >= 0.0) || background_fraction >= 1.0) {
    throw ConfigError("background_fraction must lie in [0, 1): a slide needs tissue");
  }
  if (marker_fraction <= 0.0 || marker_fraction >= 1.0) throw ConfigError("marker_fraction must lie in (0, 1)");
  if (region_block == 0) throw ConfigError("region_block must be positive");
  if (region_noise < 0.0 || region_noise >= 1.0) throw ConfigError("region_noise must lie in [0, 1)");
}

std::span<const double> SyntheticSlide::quadrant_latent(std::size_t r, std::size_t c,
                                                        std::size_t q) const noexcept {
  const std::size_t fr = 2 * r + q / 2, fc = 2 * c + q % 2;
  return {quadrant_latents.data() + (fr * 2 * cols + fc) * latent_dim, latent_dim};
}

std::size_t SyntheticSlide::num_valid() const noexcept {
  return static_cast<std::size_t>(std::count(validity.begin(), validity.end(), std::uint8_t{1}));
}

std::vector<std::vector<double>> class_prototypes(const SynthConfig& cfg) {
  const std::size_t distinct = cfg.num_tile_classes() - 1;
  if (cfg.latent_dim < distinct) throw ConfigError("latent_dim must be at least R+1");
  // Random orthonormal directions (Gram-Schmidt) scaled by the separation, so
  // every pair of distinct prototypes lies at distance separation * sqrt(2).
  Rng rng = Rng::stream(cfg.world_seed, "world/prototypes");
  std::vector<std::vector<double>> basis;
  while (basis.size() < distinct) {
    std::vector<double> v(cfg.latent_dim);
    for (double& x : v) x = rng.normal();
    for (const auto& b : basis) {
      const double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= dot * b[k];
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<std::vector<double>> protos(cfg.num_tile_classes());
  std::size_t next = 0;
  for (std::size_t c = 0; c < protos.size(); ++c) {
    if (c == cfg.alias_pair.second) continue;
    protos[c] = basis[next++];
    for (double& x : protos[c]) x *= cfg.class_separation;
  }
  protos[cfg.alias_pair.second] = protos[cfg.alias_pair.first];
  return protos;
}

namespace {

struct WorldTables {
  std::vector<std::vector<double>> prototypes;
  std::vector<double> gene_response;        // genes x regions
  std::vector<double> spot_region;          // regions x spot_genes
  std::vector<double> spot_latent;          // latent_dim x spot_genes
};

WorldTables world_tables(const SynthConfig& cfg) {
  WorldTables w;
  w.prototypes = class_prototypes(cfg);
  Rng g = Rng::stream(cfg.world_seed, "world/gene-response");
  w.gene_response.resize(cfg.genes * cfg.regions);
  for (double& v : w.gene_response) v = g.normal();
  Rng s = Rng::stream(cfg.world_seed, "world/spot-response");
  w.spot_region.resize(cfg.regions * cfg.spot_genes);
  for (double& v : w.spot_region) v = s.normal();
  w.spot_latent.resize(cfg.latent_dim * cfg.spot_genes);
  const double ls = 0.3 / std::sqrt(static_cast<double>(cfg.latent_dim));
  for (double& v : w.spot_latent) v = ls * s.normal();
  return w;
}

std::vector<int> region_field(const SynthConfig& cfg, Rng& rng) {
  const std::size_t b = cfg.region_block;
  const std::size_t off_r = rng.below(b), off_c = rng.below(b);
  const std::size_t coarse_r = (cfg.rows + off_r) / b + 1, coarse_c = (cfg.cols + off_c) / b + 1;
  std::vector<int> coarse(coarse_r * coarse_c);
  for (int& v : coarse) v = static_cast<int>(rng.below(cfg.regions));

  const std::size_t m = cfg.rows, n = cfg.cols;
  std::vector<int> field(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      int v = coarse[((r + off_r) / b) * coarse_c + (c + off_c) / b];
      if (rng.bernoulli(cfg.region_noise)) v = static_cast<int>(rng.below(cfg.regions));
      field[r * n + c] = v;
    }

  // Majority over self + 4-neighbourhood; ties keep the current label when it
  // is among the maxima, else take the smallest tied label.
  std::vector<int> counts(cfg.regions);
  for (int round = 0; round < 3; ++round) {
    std::vector<int> next(field.size());
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        std::fill(counts.begin(), counts.end(), 0);
        const int self = field[r * n + c];
        counts[self]++;
        if (r > 0) counts[field[(r - 1) * n + c]]++;
        if (r + 1 < m) counts[field[(r + 1) * n + c]]++;
        if (c > 0) counts[field[r * n + c - 1]]++;
        if (c + 1 < n) counts[field[r * n + c + 1]]++;
        const int best = *std::max_element(counts.begin(), counts.end());
        int pick = self;
        if (counts[self] != best) pick = static_cast<int>(std::find(counts.begin(), counts.end(), best) - counts.begin());
        next[r * n + c] = pick;
      }
    field.swap(next);
  }
  return field;
}

std::vector<std::uint8_t> validity_field(const SynthConfig& cfg, Rng& rng) {
  const std::size_t m = cfg.rows, n = cfg.cols, cells = m * n;
  std::vector<std::uint8_t> valid(cells, 1);
  const auto n_bg = static_cast<std::size_t>(std::llround(cfg.background_fraction * static_cast<double>(cells)));
  if (n_bg == 0) return valid;
  if (n_bg >= cells) throw ConfigError("background_fraction leaves no tissue");
  const std::size_t b = cfg.region_block;
  const std::size_t coarse_r = m / b + 2, coarse_c = n / b + 2;
  std::vector<double> coarse(coarse_r * coarse_c);
  for (double& v : coarse) v = rng.uniform();
  std::vector<double> raw(cells);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) raw[r * n + c] = coarse[(r / b) * coarse_c + c / b] + 0.3 * rng.uniform();
  std::vector<double> smooth(cells);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0.0;
      int k = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(m) || cc >= static_cast<long>(n)) continue;
          s += raw[static_cast<std::size_t>(rr) * n + static_cast<std::size_t>(cc)];
          ++k;
        }
      smooth[r * n + c] = s / k;
    }
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b2) { return smooth[a] < smooth[b2]; });
  for (std::size_t i = 0; i < n_bg; ++i) valid[order[i]] = 0;
  return valid;
}

}  // namespace

SyntheticSlide generate_slide(std::uint64_t seed, const SynthConfig& cfg) {
  cfg.validate();
  const WorldTables world = world_tables(cfg);
  const std::size_t m = cfg.rows, n = cfg.cols, L = cfg.latent_dim, R = cfg.regions;

  SyntheticSlide s;
  s.seed = seed;
  s.rows = m;
  s.cols = n;
  s.latent_dim = L;
  s.spot_genes = cfg.spot_genes;
  {
    Rng rng = Rng::stream(seed, "slide/regions");
    s.region_labels = region_field(cfg, rng);
  }
  {
    Rng rng = Rng::stream(seed, "slide/validity");
    s.validity = validity_field(cfg, rng);
  }

  s.tile_labels.assign(m * n, -1);
  s.tile_latents.assign(m * n * L, 0.0);
  s.quadrant_latents.assign(4 * m * n * L, 0.0);
  s.spot_expression.assign(m * n * cfg.spot_genes, 0.0);
  Rng tiles = Rng::stream(seed, "slide/tiles");
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      if (!s.validity[i]) continue;
      const int region = s.region_labels[i];
      int cls = region;
      if (region == static_cast<int>(cfg.alias_pair.first) && tiles.bernoulli(cfg.marker_fraction)) {
        cls = static_cast<int>(cfg.marker_class(0));
      } else if (region == static_cast<int>(cfg.alias_pair.second) &&
                 tiles.bernoulli(cfg.marker_fraction)) {
        cls = static_cast<int>(cfg.marker_class(1));
      }
      s.tile_labels[i] = cls;
      double* lat = s.tile_latents.data() + i * L;
      const auto& proto = world.prototypes[static_cast<std::size_t>(cls)];
      for (std::size_t k = 0; k < L; ++k) lat[k] = proto[k] + cfg.latent_noise * tiles.normal();
      for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t fr = 2 * r + q / 2, fc = 2 * c + q % 2;
        double* ql = s.quadrant_latents.data() + (fr * 2 * n + fc) * L;
        for (std::size_t k = 0; k < L; ++k) ql[k] = lat[k] + cfg.quadrant_jitter * tiles.normal();
      }
      double* spot = s.spot_expression.data() + i * cfg.spot_genes;
      for (std::size_t gidx = 0; gidx < cfg.spot_genes; ++gidx) {
        double v = world.spot_region[static_cast<std::size_t>(region) * cfg.spot_genes + gidx];
        for (std::size_t k = 0; k < L; ++k) v += world.spot_latent[k * cfg.spot_genes + gidx] * lat[k];
        spot[gidx] = v + 0.1 * tiles.normal();
      }
    }
  }

  std::vector<double> composition(R, 0.0);
  const double n_valid = static_cast<double>(s.num_valid());
  for (std::size_t i = 0; i < m * n; ++i)
    if (s.validity[i]) composition[static_cast<std::size_t>(s.region_labels[i])] += 1.0 / n_valid;
  const double frac_a = composition[cfg.alias_pair.first];
  const double frac_b = composition[cfg.alias_pair.second];
  s.slide_label = frac_b > frac_a ? 1 : 0;

  Rng gene_rng = Rng::stream(seed, "slide/genes");
  s.gene_vector.assign(cfg.genes, 0.0);
  for (std::size_t gidx = 0; gidx < cfg.genes; ++gidx) {
    double v = 0.0;
    for (std::size_t r = 0; r < R; ++r) v += world.gene_response[gidx * R + r] * composition[r];
    s.gene_vector[gidx] = v + cfg.gene_noise * gene_rng.normal();
  }
  return s;
}

double neighbour_agreement(const SyntheticSlide& slide) {
  std::size_t agree = 0, total = 0;
  for (std::size_t r = 0; r < slide.rows; ++r)
    for (std::size_t c = 0; c < slide.cols; ++c) {
      const int v = slide.region_labels[slide.index(r, c)];
      if (r + 1 < slide.rows) {
        ++total;
        agree += v == slide.region_labels[slide.index(r + 1, c)];
      }
      if (c + 1 < slide.cols) {
        ++total;
        agree += v == slide.region_labels[slide.index(r, c + 1)];
      }
    }
  return total ? static_cast<double>(agree) / static_cast<double>(total) : 1.0;
}

}  // namespace ticon::synth
