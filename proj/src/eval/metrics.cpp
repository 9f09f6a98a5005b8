// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "ticon/errors.hpp"

namespace ticon::eval {

namespace {
void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": prediction and label counts differ");
  if (a == 0) throw EmptyInputError(std::string(what) + ": no samples");
}
}  // namespace

double macro_f1(std::span<const int> pred, std::span<const int> truth) {
  require_same_size(pred.size(), truth.size(), "macro_f1");
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(pred.begin(), pred.end());
  double acc = 0.0;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == c, t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    if (tp > 0) acc += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  return acc / static_cast<double>(classes.size());
}

double balanced_accuracy(std::span<const int> pred, std::span<const int> truth) {
  require_same_size(pred.size(), truth.size(), "balanced_accuracy");
  std::map<int, std::pair<std::size_t, std::size_t>> per;  // class -> (hits, total)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [hit, total] = per[truth[i]];
    ++total;
    hit += pred[i] == truth[i];
  }
  double acc = 0.0;
  for (const auto& [c, ht] : per) acc += static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return acc / static_cast<double>(per.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require_same_size(scores.size(), labels.size(), "roc_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Rank-sum form with midranks for ties.
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) {
      const int l = labels[order[k]];
      if (l != 0 && l != 1) throw MetricError("roc_auc: labels must be 0 or 1");
      if (l == 1) {
        rank_sum += mid;
        pos += 1.0;
      } else {
        neg += 1.0;
      }
    }
    i = j;
  }
  if (pos == 0.0 || neg == 0.0) throw MetricError("roc_auc: both classes must be present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw MetricError("pearson: constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ticon::eval
