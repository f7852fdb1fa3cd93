// Copyright 2026 The AVSR Kit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "avsr/numerics/tape.h"

namespace avsr {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("value() on an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const {
  return tape_ != nullptr && tape_->requires_grad(id_);
}

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return n.external ? *n.external : n.value;
}

Var Tape::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::CheckOwned(Var v) const {
  if (v.tape() != this) {
    throw ContractError("Var belongs to a different tape");
  }
}

Var Tape::Constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.leaf = true;
  return Push(std::move(n));
}

Var Tape::Input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.leaf = true;
  n.requires_grad = grad_enabled_;
  return Push(std::move(n));
}

Var Tape::Param(const Parameter& param) {
  auto it = param_nodes_.find(&param);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.external = &param.value;
  n.leaf = true;
  n.requires_grad = grad_enabled_;
  Var v = Push(std::move(n));
  param_nodes_.emplace(&param, v.id());
  return v;
}

Var Tape::Record(Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  value.RoundToDType();
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      CheckOwned(in);
      if (in.requires_grad()) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return Push(std::move(n));
}

void Tape::Accumulate(Var input, Tensor grad) {
  CheckOwned(input);
  Node& n = nodes_[static_cast<size_t>(input.id())];
  if (!n.requires_grad) return;
  if (grad.shape() != value(input.id()).shape()) {
    throw ShapeError(StrCat("gradient shape ", ShapeString(grad.shape()),
                            " does not match value shape ",
                            ShapeString(value(input.id()).shape())));
  }
  if (!n.has_grad) {
    n.grad = std::move(grad);
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.data();
  auto src = grad.data();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::Accumulate(Var input, const Tensor& grad, double scale) {
  CheckOwned(input);
  Node& n = nodes_[static_cast<size_t>(input.id())];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = Tensor(value(input.id()).shape());
    n.has_grad = true;
  }
  auto dst = n.grad.data();
  auto src = grad.data();
  if (dst.size() != src.size()) {
    throw ShapeError("gradient size mismatch in Accumulate");
  }
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

void Tape::Backward(Var loss) {
  CheckOwned(loss);
  if (!grad_enabled_) throw ContractError("Backward on a no-grad tape");
  if (backward_done_) throw ContractError("Backward called twice on a tape");
  if (loss.value().size() != 1) {
    throw ContractError(StrCat("Backward requires a scalar loss, got shape ",
                               ShapeString(loss.shape())));
  }
  backward_done_ = true;
  if (!loss.requires_grad()) return;
  Accumulate(loss, Tensor::Full(loss.shape(), 1.0));
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.has_grad || n.leaf) continue;
    if (n.backward) {
      // Move out first: the callback may grow nodes_ via Accumulate.
      Tensor grad = std::move(n.grad);
      BackwardFn fn = std::move(n.backward);
      fn(*this, value(id), grad);
    }
    // Intermediate gradients are released once propagated.
    nodes_[static_cast<size_t>(id)].grad = Tensor();
    nodes_[static_cast<size_t>(id)].has_grad = false;
  }
}

bool Tape::HasGrad(Var v) const {
  CheckOwned(v);
  return nodes_[static_cast<size_t>(v.id())].has_grad;
}

Tensor Tape::Grad(Var v) const {
  CheckOwned(v);
  const Node& n = nodes_[static_cast<size_t>(v.id())];
  if (!n.leaf) {
    throw ContractError("gradients are retained for leaf values only");
  }
  if (n.has_grad) return n.grad;
  return Tensor(value(v.id()).shape());
}

Tensor Tape::ParamGrad(const Parameter& param) const {
  auto it = param_nodes_.find(&param);
  if (it == param_nodes_.end()) return Tensor(param.value.shape());
  const Node& n = nodes_[static_cast<size_t>(it->second)];
  if (n.has_grad) return n.grad;
  return Tensor(param.value.shape());
}

bool Tape::ParamUsed(const Parameter& param) const {
  return param_nodes_.count(&param) > 0;
}

}  // namespace avsr
