// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ticon/numerics/tensor.hpp"

namespace ticon::num {

/// A learnable tensor owned by a model. `grad` always has the shape of
/// `value`; it accumulates across backward passes until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  bool decay = true;  // subject to decoupled weight decay

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool decay_ = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0), decay(decay_) {}

  void zero_grad() { grad = Tensor(value.shape(), 0.0); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  const Tensor& value() const;
  /// Gradient after Tape::backward. Throws if the node does not require grad.
  const Tensor& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* t, std::uint32_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, which
/// is a topological order, so backward is a single reverse sweep.
///
/// Single-threaded: one tape per training step.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is readable through Var::grad() after backward.
  Var leaf(Tensor value);
  /// References `p.value` without copying. When gradients are enabled and the
  /// parameter is trainable, backward accumulates into `p.grad`.
  Var param(Parameter& p);
  /// Read-only reference: never requires grad.
  Var param(const Parameter& p);

  /// Appends an op result. The node requires grad iff any input does; the
  /// backward closure is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  /// Seeds d(root)/d(root) = 1 and sweeps. `root` must be 1 x 1.
  void backward(Var root);

  const Tensor& value(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulator for node `id`, allocated as zeros on first use.
  Tensor& grad(std::uint32_t id);
  bool has_grad(std::uint32_t id) const { return !nodes_[id].grad.empty(); }
  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

}  // namespace ticon::num
