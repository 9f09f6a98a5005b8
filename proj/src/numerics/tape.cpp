// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/numerics/tape.hpp"

#include "ticon/errors.hpp"

namespace ticon::num {

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& Var::grad() const {
  if (!tape_->requires_grad(id_)) throw Error("grad() on a node that does not require grad");
  return tape_->grad(id_);
}

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  require_finite(value, "leaf");
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  if (grad_enabled_ && p.trainable) {
    n.requires_grad = true;
    n.param = &p;
  }
  return push(std::move(n));
}

Var Tape::param(const Parameter& p) {
  Node n;
  n.external = &p.value;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  require_finite(value, "forward pass");
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (&v.tape() != this) throw Error("op mixes nodes from different tapes");
      if (nodes_[v.id()].requires_grad) n.requires_grad = true;
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Tensor& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(value(id).shape(), 0.0);
  return n.grad;
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw Error("backward root belongs to another tape");
  if (root.value().size() != 1) {
    throw ShapeError("backward root must be scalar, got " + shape_string(root.value().shape()));
  }
  if (!nodes_[root.id()].requires_grad) return;
  grad(root.id()).fill(1.0);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    require_finite(n.grad, "backward pass");
    if (n.backward) n.backward(*this, static_cast<std::uint32_t>(i));
    if (n.param) {
      Tensor& pg = n.param->grad;
      if (!pg.same_shape(n.param->value)) pg = Tensor(n.param->value.shape(), 0.0);
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
}

}  // namespace ticon::num
