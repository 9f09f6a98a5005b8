// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/train/corpus.hpp"

#include "ticon/errors.hpp"
#include "ticon/parallel.hpp"
#include "ticon/rng.hpp"

namespace ticon::train {

bool Corpus::has_encoder(const std::string& id) const {
  for (const auto& s : slides)
    if (!s.count(id)) return false;
  return !slides.empty();
}

GridSet Corpus::window(std::size_t i) const {
  const synth::Candidate& c = candidates.at(i);
  GridSet out;
  for (const auto& [id, g] : slides.at(c.slide)) out.emplace(id, synth::crop(g, c.row, c.col, c.k, c.k));
  return out;
}

Corpus build_corpus(const synth::SynthConfig& synth_cfg, const synth::EncoderRegistry& registry,
                    const std::vector<std::string>& encoder_ids, std::span<const std::uint64_t> slide_seeds,
                    const synth::CandidateConfig& cand_cfg, std::uint64_t candidate_seed) {
  if (slide_seeds.empty()) throw EmptyInputError("build_corpus: no slides");
  Corpus c;
  c.registry_digest = registry.digest();
  c.slide_seeds.assign(slide_seeds.begin(), slide_seeds.end());
  c.slides.resize(slide_seeds.size());
  std::vector<std::vector<synth::Candidate>> cands(slide_seeds.size());
  parallel_for(slide_seeds.size(), [&](std::size_t s) {
    const synth::SyntheticSlide slide = synth::generate_slide(slide_seeds[s], synth_cfg);
    for (const auto& id : encoder_ids) c.slides[s].emplace(id, synth::encode_tiles(slide, registry, id));
    cands[s] = synth::sample_candidates(slide.validity, slide.rows, slide.cols, cand_cfg,
                                        stream_seed(candidate_seed, "slide/" + std::to_string(s)), s);
  });
  for (const auto& v : cands) c.candidates.insert(c.candidates.end(), v.begin(), v.end());
  if (c.candidates.empty()) throw DatasetError("build_corpus: no slide has a feasible candidate window");
  return c;
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = base + i;
  return out;
}

void check_aligned(const GridSet& grids) {
  if (grids.empty()) throw EmptyInputError("no grids");
  const synth::EmbeddingGrid& ref = grids.begin()->second;
  for (const auto& [id, g] : grids) {
    if (g.rows != ref.rows || g.cols != ref.cols || g.origin_row != ref.origin_row ||
        g.origin_col != ref.origin_col || g.validity != ref.validity) {
      throw AlignmentError("grid of '" + id + "' is not aligned with grid of '" + grids.begin()->first + "'");
    }
  }
}

}  // namespace ticon::train
