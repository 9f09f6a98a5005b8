// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/eval/probes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <set>

#include "ticon/errors.hpp"
#include "ticon/eval/metrics.hpp"
#include "ticon/kvtext.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/numerics/optim.hpp"

namespace ticon::eval {

using Eigen::MatrixXd;
using num::Tensor;

namespace {

MatrixXd gather(const Tensor& t, const std::vector<std::size_t>& rows) {
  MatrixXd m(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < t.cols(); ++k) m(i, k) = t(rows[i], k);
  return m;
}

Tensor to_tensor(const MatrixXd& m) {
  Tensor t = Tensor::matrix(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t(r, c) = m(r, c);
  return t;
}

std::vector<int> pick(const std::vector<int>& v, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

// For each query row, the k_max nearest train rows ordered by (distance, row).
struct Neighbours {
  std::vector<std::vector<std::pair<double, std::size_t>>> lists;
};

Neighbours nearest(const Tensor& features, const std::vector<std::size_t>& train,
                   const std::vector<std::size_t>& query, std::size_t k_max, KnnDistance distance) {
  MatrixXd a = gather(features, train), q = gather(features, query);
  MatrixXd d;
  if (distance == KnnDistance::kCosine) {
    auto normalize = [](MatrixXd& m) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double n = m.row(r).norm();
        if (n > 0.0) m.row(r) /= n;
      }
    };
    normalize(a);
    normalize(q);
    d = (1.0 - (q * a.transpose()).array()).matrix();
  } else {
    d = ((-2.0 * q * a.transpose()).colwise() + q.rowwise().squaredNorm()).rowwise() +
        a.rowwise().squaredNorm().transpose();
    d = d.cwiseMax(0.0).cwiseSqrt();
  }
  Neighbours nb;
  const std::size_t k = std::min(k_max, train.size());
  nb.lists.resize(query.size());
  std::vector<std::pair<double, std::size_t>> all(train.size());
  for (std::size_t i = 0; i < query.size(); ++i) {
    for (std::size_t j = 0; j < train.size(); ++j) all[j] = {d(i, j), j};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    nb.lists[i].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return nb;
}

std::vector<int> vote(const Neighbours& nb, const std::vector<int>& train_labels, std::size_t k) {
  std::vector<int> out;
  out.reserve(nb.lists.size());
  for (const auto& list : nb.lists) {
    std::map<int, std::pair<std::size_t, double>> tally;  // class -> (count, distance sum)
    for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
      auto& [count, dist] = tally[train_labels[list[i].second]];
      ++count;
      dist += list[i].first;
    }
    int best = 0;
    std::size_t best_count = 0;
    double best_mean = std::numeric_limits<double>::infinity();
    for (const auto& [c, cd] : tally) {
      const double mean = cd.second / static_cast<double>(cd.first);
      if (cd.first > best_count || (cd.first == best_count && mean < best_mean)) {
        best = c;
        best_count = cd.first;
        best_mean = mean;
      }
    }
    out.push_back(best);
  }
  return out;
}

double mean_pcc(const MatrixXd& pred, const MatrixXd& truth, bool strict) {
  double acc = 0.0;
  std::size_t n = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    const Eigen::VectorXd p = pred.col(j), t = truth.col(j);
    try {
      acc += pearson(std::span(p.data(), p.size()), std::span(t.data(), t.size()));
      ++n;
    } catch (const MetricError&) {
      if (strict) throw MetricError("pca_ridge: test target " + std::to_string(j) + " is constant or unpredicted");
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace

std::vector<std::size_t> ProbeDataset::rows(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

void ProbeDataset::check(bool classification) const {
  if (split.size() != size()) throw ShapeError("probe dataset: split assignment does not cover every row");
  if (classification && labels.size() != size()) throw ShapeError("probe dataset: one label per row required");
  if (!classification && targets.rows() != size()) throw ShapeError("probe dataset: one target row per feature row");
  if (rows(Split::kTrain).empty()) throw DatasetError("probe dataset: empty train split");
  if (rows(Split::kTest).empty()) throw DatasetError("probe dataset: empty test split");
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["variant"] = variant;
  j["metric"] = metric;
  j["value"] = value;
  j["selected"] = selected;
  j["seed"] = seed;
  nlohmann::ordered_json e = nlohmann::ordered_json::object();
  for (const auto& [k, v] : extra) e[k] = v;
  j["extra"] = e;
  return j.dump();
}

EvalReport EvalReport::from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    EvalReport r;
    r.task = j.at("task");
    r.variant = j.at("variant");
    r.metric = j.at("metric");
    r.value = j.at("value");
    r.selected = j.value("selected", "");
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("extra"))
      for (const auto& [k, v] : j.at("extra").items()) r.extra[k] = v.get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed report line: ") + e.what());
  }
}

std::vector<int> knn_predict(const Tensor& features, const std::vector<int>& labels,
                             const std::vector<std::size_t>& train, const std::vector<std::size_t>& query,
                             std::size_t k, KnnDistance distance) {
  if (train.empty() || query.empty()) throw DatasetError("knn: empty split");
  if (k == 0) throw ConfigError("knn: k must be positive");
  return vote(nearest(features, train, query, k, distance), pick(labels, train), k);
}

EvalReport knn_probe(const ProbeDataset& ds, const std::vector<std::size_t>& ks, KnnDistance distance) {
  ds.check(true);
  if (ks.empty()) throw ConfigError("knn_probe: no k values");
  const auto train = ds.rows(Split::kTrain), val = ds.rows(Split::kVal), test = ds.rows(Split::kTest);
  const std::vector<int> train_labels = pick(ds.labels, train);
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  if (*std::min_element(ks.begin(), ks.end()) == 0) throw ConfigError("knn_probe: k must be positive");

  std::size_t best_k = ks.front();
  if (!val.empty()) {
    const Neighbours nb = nearest(ds.features, train, val, k_max, distance);
    const std::vector<int> truth = pick(ds.labels, val);
    double best = -1.0;
    std::vector<std::size_t> sorted = ks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k : sorted) {
      const double f = macro_f1(vote(nb, train_labels, k), truth);
      if (f > best) {
        best = f;
        best_k = k;
      }
    }
  }
  const Neighbours nb = nearest(ds.features, train, test, best_k, distance);
  EvalReport r;
  r.metric = "F1-macro";
  r.value = macro_f1(vote(nb, train_labels, best_k), pick(ds.labels, test));
  r.selected = "k=" + std::to_string(best_k);
  return r;
}

Tensor ridge_fit(const Tensor& x, const Tensor& y, double lambda) {
  if (x.rows() != y.rows()) throw ShapeError("ridge_fit: row counts differ");
  if (!(lambda >= 0.0)) throw ConfigError("ridge_fit: lambda must be non-negative");
  const MatrixXd X = gather(x, [&] {
    std::vector<std::size_t> r(x.rows());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
  }());
  MatrixXd Y(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) Y(r, c) = y(r, c);
  MatrixXd A = X.transpose() * X;
  A.diagonal().array() += lambda;
  return to_tensor(A.ldlt().solve(X.transpose() * Y));
}

EvalReport pca_ridge(const ProbeDataset& ds, std::size_t pca_dims, const std::vector<double>& lambdas) {
  ds.check(false);
  if (lambdas.empty()) throw ConfigError("pca_ridge: no lambda values");
  const auto train = ds.rows(Split::kTrain), val = ds.rows(Split::kVal), test = ds.rows(Split::kTest);
  if (pca_dims == 0 || pca_dims > std::min(train.size(), ds.features.cols())) {
    throw ConfigError("pca_ridge: pca_dims must lie in [1, min(n_train, d)]");
  }
  const MatrixXd Xtr = gather(ds.features, train);
  const Eigen::RowVectorXd mu = Xtr.colwise().mean();
  const MatrixXd Xc = Xtr.rowwise() - mu;
  const MatrixXd cov = Xc.transpose() * Xc / static_cast<double>(std::max<std::size_t>(1, train.size() - 1));
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size() - 1; i >= 0 && keep.size() < pca_dims; --i)
    if (ev(i) > 1e-10 * top) keep.push_back(i);
  if (keep.empty()) throw NumericalError("pca_ridge: train features have zero variance");
  MatrixXd proj(ds.features.cols(), keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) proj.col(c) = eig.eigenvectors().col(keep[c]) / std::sqrt(ev(keep[c]));
  auto project = [&](const std::vector<std::size_t>& rows) {
    return MatrixXd((gather(ds.features, rows).rowwise() - mu) * proj);
  };

  const MatrixXd Ytr = gather(ds.targets, train);
  const Eigen::RowVectorXd ymu = Ytr.colwise().mean();
  const MatrixXd Ztr = project(train);
  const MatrixXd G = Ztr.transpose() * Ztr;
  const MatrixXd ZtY = Ztr.transpose() * (Ytr.rowwise() - ymu);
  auto fit = [&](double lambda) {
    MatrixXd A = G;
    A.diagonal().array() += lambda;
    return MatrixXd(A.ldlt().solve(ZtY));
  };
  auto predict = [&](const MatrixXd& beta, const std::vector<std::size_t>& rows) {
    return MatrixXd((project(rows) * beta).rowwise() + ymu);
  };

  double best_lambda = lambdas.front();
  if (!val.empty() && lambdas.size() > 1) {
    const MatrixXd Yv = gather(ds.targets, val);
    double best = -2.0;
    for (double l : lambdas) {
      const double p = mean_pcc(predict(fit(l), val), Yv, false);
      if (p > best) {
        best = p;
        best_lambda = l;
      }
    }
  }
  EvalReport r;
  r.metric = "PCC-mean";
  r.value = mean_pcc(predict(fit(best_lambda), test), gather(ds.targets, test), true);
  r.selected = "lambda=" + format_double(best_lambda) + ",pca=" + std::to_string(keep.size());
  return r;
}

EvalReport linear_probe(const ProbeDataset& ds, const LinearProbeConfig& cfg) {
  ds.check(true);
  if (cfg.costs.empty()) throw ConfigError("linear_probe: no cost values");
  const auto train = ds.rows(Split::kTrain), val = ds.rows(Split::kVal), test = ds.rows(Split::kTest);
  std::set<int> class_set(ds.labels.begin(), ds.labels.end());
  const std::vector<int> classes(class_set.begin(), class_set.end());
  auto index_of = [&](int label) {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
  };
  std::set<int> train_classes;
  for (std::size_t r : train) train_classes.insert(ds.labels[r]);
  if (train_classes.size() < 2) throw DatasetError("linear_probe: train split has a single class");

  const std::size_t d = ds.features.cols(), C = classes.size(), n = train.size();
  const MatrixXd Xtr = gather(ds.features, train);
  const Eigen::RowVectorXd mu = Xtr.colwise().mean();
  Eigen::RowVectorXd sd = ((Xtr.rowwise() - mu).array().square().colwise().mean()).sqrt();
  for (Eigen::Index k = 0; k < sd.size(); ++k)
    if (!(sd(k) > 1e-12)) sd(k) = 1.0;
  auto standardize = [&](const std::vector<std::size_t>& rows) {
    return to_tensor(((gather(ds.features, rows).rowwise() - mu).array().rowwise() / sd.array()).matrix());
  };
  const Tensor x = standardize(train);

  std::vector<double> freq(C, 0.0);
  for (std::size_t r : train) freq[index_of(ds.labels[r])] += 1.0;
  std::vector<double> cw(C, 0.0);
  double wsum = 0.0;
  for (std::size_t c = 0; c < C; ++c)
    if (freq[c] > 0.0) cw[c] = 1.0 / freq[c];
  for (std::size_t r : train) wsum += cw[index_of(ds.labels[r])];
  Tensor target = Tensor::matrix(n, C);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = index_of(ds.labels[train[i]]);
    target(i, c) = cw[c] / wsum;  // (weight normalized to mean 1) / n
  }

  struct Fit {
    Tensor w, b;
  };
  auto train_one = [&](double cost) {
    num::Parameter w("w", Tensor::matrix(d, C), false), b("b", Tensor::matrix(1, C), false);
    num::OptState opt;
    const num::AdamWHyper hyper{0.9, 0.999, 0.0, 1e-8};
    const double reg = 1.0 / (2.0 * cost * static_cast<double>(n));
    std::vector<num::Parameter*> ps = {&w, &b};
    for (std::size_t it = 0; it < cfg.iters; ++it) {
      w.zero_grad();
      b.zero_grad();
      num::Tape tape(true);
      num::Var W = tape.param(w);
      num::Var logp = num::ops::log_softmax_rows(num::ops::linear(tape.constant(x), W, tape.param(b)));
      num::Var ce = num::ops::scale(num::ops::sum(num::ops::mul_const(logp, target)), -1.0);
      num::Var loss = num::ops::add(ce, num::ops::scale(num::ops::sum(num::ops::mul(W, W)), reg));
      tape.backward(loss);
      num::adamw_step(ps, opt, cfg.lr, hyper);
    }
    return Fit{w.value, b.value};
  };
  auto scores = [&](const Fit& f, const std::vector<std::size_t>& rows) {
    const Tensor z = standardize(rows);
    Tensor logits = num::gemm(z, f.w);
    for (std::size_t i = 0; i < logits.rows(); ++i)
      for (std::size_t c = 0; c < C; ++c) logits(i, c) += f.b(0, c);
    return logits;
  };
  auto predict = [&](const Tensor& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < C; ++c)
        if (logits(i, c) > logits(i, best)) best = c;
      out[i] = classes[best];
    }
    return out;
  };

  double best_cost = cfg.costs.front();
  Fit best_fit = train_one(best_cost);
  if (!val.empty() && cfg.costs.size() > 1) {
    double best = balanced_accuracy(predict(scores(best_fit, val)), pick(ds.labels, val));
    for (std::size_t i = 1; i < cfg.costs.size(); ++i) {
      Fit f = train_one(cfg.costs[i]);
      const double ba = balanced_accuracy(predict(scores(f, val)), pick(ds.labels, val));
      if (ba > best) {
        best = ba;
        best_cost = cfg.costs[i];
        best_fit = std::move(f);
      }
    }
  }
  const Tensor logits = scores(best_fit, test);
  const std::vector<int> truth = pick(ds.labels, test);
  EvalReport r;
  r.metric = "balanced-accuracy";
  r.value = balanced_accuracy(predict(logits), truth);
  r.selected = "C=" + format_double(best_cost);
  if (C == 2) {
    std::vector<double> s(logits.rows());
    std::vector<int> l(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      s[i] = logits(i, 1) - logits(i, 0);
      l[i] = truth[i] == classes[1] ? 1 : 0;
    }
    try {
      r.extra["AUC"] = roc_auc(s, l);
    } catch (const MetricError&) {
    }
  }
  return r;
}

}  // namespace ticon::eval
