// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ticon/numerics/tensor.hpp"

namespace ticon::eval {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

/// Frozen features with either class labels or regression targets.
struct ProbeDataset {
  num::Tensor features;         // n x d
  std::vector<int> labels;      // n, classification
  num::Tensor targets;          // n x g, regression
  std::vector<Split> split;     // n

  std::size_t size() const { return features.rows(); }
  std::vector<std::size_t> rows(Split s) const;
  /// ShapeError on inconsistent sizes, DatasetError on an empty train or
  /// test split.
  void check(bool classification) const;
};

struct EvalReport {
  std::string task;
  std::string variant;  // raw | iso | ctx
  std::string metric;   // F1-macro | PCC-mean | balanced-accuracy | AUC
  double value = 0.0;
  std::string selected;  // chosen hyperparameter, e.g. "k=5"
  std::uint64_t seed = 0;
  std::map<std::string, double> extra;

  std::string to_json() const;
  static EvalReport from_json(const std::string& line);
};

enum class KnnDistance { kCosine, kEuclidean };

/// k-NN vote over the train split. Among the k nearest (distance ties go to
/// the lower train row), the most frequent class wins; ties go to the class
/// with the smaller mean distance, then the smaller class index. k is chosen
/// by validation macro-F1 (smaller k on ties; the first k when there is no
/// validation split); the report carries test macro-F1.
EvalReport knn_probe(const ProbeDataset& ds, const std::vector<std::size_t>& ks,
                     KnnDistance distance = KnnDistance::kCosine);

/// Predicted classes of `query` rows against `train` rows for one k.
std::vector<int> knn_predict(const num::Tensor& features, const std::vector<int>& labels,
                             const std::vector<std::size_t>& train, const std::vector<std::size_t>& query,
                             std::size_t k, KnnDistance distance = KnnDistance::kCosine);

/// Ridge coefficients (X^T X + lambda I)^-1 X^T Y, no intercept.
num::Tensor ridge_fit(const num::Tensor& x, const num::Tensor& y, double lambda);

/// PCA (fit on train, components whitened, zero-variance directions dropped)
/// followed by per-target ridge with an intercept. lambda is chosen by
/// validation mean PCC; the report carries test PCC averaged over targets.
/// MetricError naming the target when a test target is constant.
EvalReport pca_ridge(const ProbeDataset& ds, std::size_t pca_dims, const std::vector<double>& lambdas);

struct LinearProbeConfig {
  std::vector<double> costs{0.5};
  std::size_t iters = 400;
  double lr = 0.05;
};

/// Multinomial logistic regression on standardized features with
/// inverse-frequency class weights (mean 1) and penalty ||W||^2 / (2 C n),
/// trained full-batch with Adam through the autodiff tape. Reports test
/// balanced accuracy, plus AUC in `extra` for binary labels.
EvalReport linear_probe(const ProbeDataset& ds, const LinearProbeConfig& cfg = {});

}  // namespace ticon::eval
