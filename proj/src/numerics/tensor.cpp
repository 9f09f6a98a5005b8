// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "ticon/errors.hpp"

namespace ticon::num {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 0;
  if (shape_.size() == 1) return shape_[0];
  return data_.size() / shape_[0];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) throw NumericalError(std::string("non-finite value in ") + where);
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::matrix(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  return out;
}

void gemm_accumulate(const Tensor& a, const Tensor& b, Tensor& c, bool trans_a, bool trans_b) {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t n = trans_a ? a.cols() : a.rows(), k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows(), m = trans_b ? b.rows() : b.cols();
  if (kb != k) {
    throw ShapeError("gemm inner dimension mismatch: " + shape_string(a.shape()) + (trans_a ? "^T" : "") + " * " +
                     shape_string(b.shape()) + (trans_b ? "^T" : ""));
  }
  if (c.rows() != n || c.cols() != m) {
    throw ShapeError("gemm output shape " + shape_string(c.shape()) + " expected [" +
                     std::to_string(n) + "x" + std::to_string(m) + "]");
  }
  const Eigen::Map<const Mat> ma(a.data().data(), a.rows(), a.cols());
  const Eigen::Map<const Mat> mb(b.data().data(), b.rows(), b.cols());
  Eigen::Map<Mat> mc(c.data().data(), n, m);
  if (trans_a && trans_b) mc.noalias() += ma.transpose() * mb.transpose();
  else if (trans_a) mc.noalias() += ma.transpose() * mb;
  else if (trans_b) mc.noalias() += ma * mb.transpose();
  else mc.noalias() += ma * mb;
}

Tensor gemm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const std::size_t n = trans_a ? a.cols() : a.rows();
  const std::size_t m = trans_b ? b.rows() : b.cols();
  Tensor c = Tensor::matrix(n, m);
  gemm_accumulate(a, b, c, trans_a, trans_b);
  return c;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ticon::num
