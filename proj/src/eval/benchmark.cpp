// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/eval/benchmark.hpp"

#include <algorithm>
#include <numeric>

#include "ticon/errors.hpp"
#include "ticon/model/ticon.hpp"
#include "ticon/parallel.hpp"
#include "ticon/rng.hpp"
#include "ticon/synth/encoder.hpp"

namespace ticon::eval {

using num::Tensor;

std::string task_name(TileTask t) {
  switch (t) {
    case TileTask::kClass:
      return "tile-class";
    case TileTask::kAliased:
      return "tile-aliased";
    case TileTask::kNonAliased:
      return "tile-nonaliased";
    case TileTask::kSpot:
      return "spot";
  }
  return "?";
}

TileTask parse_task(const std::string& s) {
  if (s == "tile-class") return TileTask::kClass;
  if (s == "tile-aliased") return TileTask::kAliased;
  if (s == "tile-nonaliased") return TileTask::kNonAliased;
  if (s == "spot") return TileTask::kSpot;
  throw ConfigError("unknown tile task '" + s + "' (expected tile-class, tile-aliased, tile-nonaliased or spot)");
}

BenchSlides make_bench_slides(const synth::SynthConfig& cfg, const synth::EncoderRegistry& registry,
                              const std::string& encoder_id, const std::vector<std::uint64_t>& seeds) {
  BenchSlides b;
  b.slides.resize(seeds.size());
  b.grids.resize(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    b.slides[i] = synth::generate_slide(seeds[i], cfg);
    b.grids[i] = synth::encode_tiles(b.slides[i], registry, encoder_id);
  });
  return b;
}

std::vector<Split> slide_splits(std::size_t n_slides, const BenchConfig& cfg) {
  if (n_slides < 3) throw DatasetError("benchmark: need at least 3 slides for train/val/test");
  std::vector<std::size_t> order(n_slides);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::stream(cfg.seed, "bench/split");
  rng.shuffle(order);
  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.train_fraction * n_slides));
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.val_fraction * n_slides));
  if (n_train + n_val >= n_slides) throw DatasetError("benchmark: split fractions leave no test slides");
  std::vector<Split> out(n_slides, Split::kTest);
  for (std::size_t i = 0; i < n_train; ++i) out[order[i]] = Split::kTrain;
  for (std::size_t i = n_train; i < n_train + n_val; ++i) out[order[i]] = Split::kVal;
  return out;
}

Tensor blockwise_context(const model::TiconParams& params, const std::string& encoder_id,
                         const synth::EmbeddingGrid& grid, std::size_t w) {
  if (w == 0 || (w >= grid.rows && w >= grid.cols)) return model::contextualize_valid(params, encoder_id, grid);
  // Row of each valid tile in the output.
  std::vector<std::size_t> slot(grid.validity.size(), 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < grid.validity.size(); ++i)
    if (grid.validity[i]) slot[i] = n++;
  Tensor out = Tensor::matrix(n, params.config.d_model);
  for (std::size_t r0 = 0; r0 < grid.rows; r0 += w)
    for (std::size_t c0 = 0; c0 < grid.cols; c0 += w) {
      const std::size_t h = std::min<std::size_t>(w, grid.rows - r0), cw = std::min<std::size_t>(w, grid.cols - c0);
      const synth::EmbeddingGrid block = synth::crop(grid, r0, c0, h, cw);
      if (block.num_valid() == 0) continue;
      const Tensor ctx = model::contextualize_valid(params, encoder_id, block);
      std::size_t k = 0;
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < cw; ++c) {
          if (!block.valid(r, c)) continue;
          const auto src = ctx.row_span(k++);
          std::copy(src.begin(), src.end(), out.row_span(slot[grid.index(r0 + r, c0 + c)]).begin());
        }
    }
  return out;
}

TileFeatures tile_features(const model::TiconParams& params, const std::string& encoder_id,
                           const BenchSlides& bench, const BenchConfig& cfg) {
  if (bench.slides.size() != bench.grids.size()) throw ShapeError("benchmark: one grid per slide required");
  const std::vector<Split> per_slide = slide_splits(bench.slides.size(), cfg);
  std::size_t n = 0;
  for (const auto& g : bench.grids) n += g.num_valid();
  if (n == 0) throw EmptyInputError("benchmark: no valid tiles");
  const std::size_t d = bench.grids.front().dim, D = params.config.d_model;
  const std::size_t g_spot = bench.slides.front().spot_genes;

  TileFeatures f;
  f.raw = Tensor::matrix(n, d);
  f.iso = Tensor::matrix(n, d + D);
  f.ctx = Tensor::matrix(n, d + D);
  f.spots = Tensor::matrix(n, g_spot);
  for (const auto& g : bench.grids)
    if (g.dim != d) throw ShapeError("benchmark: grids disagree on embedding width");
  struct Outputs {
    Tensor raw, iso, ctx;
  };
  std::vector<Outputs> outs(bench.slides.size());
  parallel_for(bench.slides.size(), [&](std::size_t s) {
    const auto& grid = bench.grids[s];
    if (grid.num_valid() == 0) return;
    outs[s].raw = model::valid_rows(grid);
    outs[s].iso = model::contextualize_isolated_batch(params, encoder_id, outs[s].raw);
    outs[s].ctx = blockwise_context(params, encoder_id, grid, cfg.context_window);
  });
  std::size_t row = 0;
  for (std::size_t s = 0; s < bench.slides.size(); ++s) {
    const auto& slide = bench.slides[s];
    const auto& grid = bench.grids[s];
    if (grid.num_valid() == 0) continue;
    const Tensor& raw = outs[s].raw;
    const Tensor& iso = outs[s].iso;
    const Tensor& ctx = outs[s].ctx;
    std::size_t r = 0;
    for (std::size_t i = 0; i < grid.validity.size(); ++i) {
      if (!grid.validity[i]) continue;
      for (std::size_t k = 0; k < d; ++k) {
        f.raw(row, k) = raw(r, k);
        f.iso(row, k) = raw(r, k);
        f.ctx(row, k) = raw(r, k);
      }
      for (std::size_t k = 0; k < D; ++k) {
        f.iso(row, d + k) = iso(r, k);
        f.ctx(row, d + k) = ctx(r, k);
      }
      const auto spot = slide.spot(i / slide.cols, i % slide.cols);
      for (std::size_t k = 0; k < g_spot; ++k) f.spots(row, k) = spot[k];
      f.labels.push_back(slide.tile_labels[i]);
      f.split.push_back(per_slide[s]);
      ++row;
      ++r;
    }
  }
  return f;
}

ProbeDataset task_dataset(const TileFeatures& f, const Tensor& features, TileTask task,
                          std::pair<std::size_t, std::size_t> alias_pair) {
  auto aliased = [&](int c) {
    return c == static_cast<int>(alias_pair.first) || c == static_cast<int>(alias_pair.second);
  };
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < f.labels.size(); ++i) {
    if (task == TileTask::kAliased && !aliased(f.labels[i])) continue;
    if (task == TileTask::kNonAliased && aliased(f.labels[i])) continue;
    rows.push_back(i);
  }
  ProbeDataset ds;
  ds.features = Tensor::matrix(rows.size(), features.cols());
  if (task == TileTask::kSpot) ds.targets = Tensor::matrix(rows.size(), f.spots.cols());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const std::size_t i = rows[j];
    std::copy_n(features.row_span(i).begin(), features.cols(), ds.features.row_span(j).begin());
    if (task == TileTask::kSpot) {
      std::copy_n(f.spots.row_span(i).begin(), f.spots.cols(), ds.targets.row_span(j).begin());
    } else {
      ds.labels.push_back(f.labels[i]);
    }
    ds.split.push_back(f.split[i]);
  }
  return ds;
}

std::vector<EvalReport> run_variants(const TileFeatures& f, TileTask task,
                                     std::pair<std::size_t, std::size_t> alias_pair, const BenchConfig& cfg) {
  std::vector<EvalReport> out;
  const std::pair<const char*, const Tensor*> variants[] = {{"raw", &f.raw}, {"iso", &f.iso}, {"ctx", &f.ctx}};
  for (const auto& [name, feats] : variants) {
    const ProbeDataset ds = task_dataset(f, *feats, task, alias_pair);
    EvalReport r;
    if (task == TileTask::kSpot) {
      const std::size_t dims = std::min({cfg.pca_dims, feats->cols(), ds.rows(Split::kTrain).size()});
      r = pca_ridge(ds, dims, cfg.lambdas);
    } else {
      r = knn_probe(ds, cfg.ks);
    }
    r.task = task_name(task);
    r.variant = name;
    r.seed = cfg.seed;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalReport> context_benchmark(const model::TiconParams& params, const std::string& encoder_id,
                                          const BenchSlides& bench, TileTask task,
                                          std::pair<std::size_t, std::size_t> alias_pair, const BenchConfig& cfg) {
  return run_variants(tile_features(params, encoder_id, bench, cfg), task, alias_pair, cfg);
}

}  // namespace ticon::eval
