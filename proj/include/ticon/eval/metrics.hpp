// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace ticon::eval {

/// Unweighted mean of per-class F1 over classes that occur in `truth` or
/// `pred`. A class with no true and no predicted positives scores 0.
double macro_f1(std::span<const int> pred, std::span<const int> truth);

/// Mean per-class recall over the classes present in `truth`.
double balanced_accuracy(std::span<const int> pred, std::span<const int> truth);

/// Probability that a random positive outscores a random negative (ties
/// count one half). MetricError unless both labels 0 and 1 occur.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// MetricError when either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace ticon::eval
