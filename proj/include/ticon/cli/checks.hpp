// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ticon/synth/encoder.hpp"

/// Invariant checks shared by `selftest` and the acceptance runner.
namespace ticon::cli {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct GradCase {
  std::string op;
  double error = 0.0;
};

/// Worst relative gradient error of each differentiable primitive over
/// `trials` random 64-bit instances (rows, cols <= 12).
std::vector<GradCase> primitive_grad_checks(std::size_t trials);

/// Parameter and input gradient check of the packed OFMM loss on a fully
/// valid 2x2 window at the desk architecture.
double pipeline_grad_check(const synth::EncoderRegistry& registry);

/// Partition, clamp, subset and frequency laws of mask plans over `seeds`
/// random draws, plus the exact 16 -> 4/12/4 split.
std::vector<Check> mask_law_checks(std::size_t seeds);

/// Bit-exact grid and checkpoint roundtrips, and the typed error for a
/// corrupted magic, CRC and length field of each format.
std::vector<Check> format_checks(const synth::EncoderRegistry& registry);

/// Permutation / duplication invariance of the attention pool, and the
/// contrastive loss against a direct loop.
std::vector<Check> aggregator_checks();

}  // namespace ticon::cli
