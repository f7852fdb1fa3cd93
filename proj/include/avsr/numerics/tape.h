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

#ifndef AVSR_NUMERICS_TAPE_H_
#define AVSR_NUMERICS_TAPE_H_

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "avsr/numerics/tensor.h"

namespace avsr {

// A trainable array. Gradients are not stored here: each Tape keeps its own
// accumulated gradient per parameter so that several tapes can run over the
// same parameters without sharing mutable state.
struct Parameter {
  std::string name;
  Tensor value;
};

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  int64_t dim(int axis) const { return value().dim(axis); }
  int rank() const { return value().rank(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Computes input gradients from the node output and its incoming gradient,
// handing them to Tape::Accumulate.
using BackwardFn =
    std::function<void(Tape& tape, const Tensor& out, const Tensor& grad)>;

// Records a forward computation in execution order. Reverse traversal of the
// record is a valid topological order for the backward pass. Single writer.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var Constant(Tensor value);
  // Differentiable leaf that is not a Parameter (used by gradient checks).
  Var Input(Tensor value);
  // Leaf bound to parameter storage; repeated calls return the same node.
  Var Param(const Parameter& param);

  // Adds an op node. The backward function is dropped when no input
  // requires a gradient.
  Var Record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  void Backward(Var loss);

  // Called from backward functions; no-op for inputs without gradient.
  void Accumulate(Var input, Tensor grad);
  void Accumulate(Var input, const Tensor& grad, double scale);

  bool HasGrad(Var v) const;
  // Gradient of a leaf (Input or Param). Zeros when the leaf was unused.
  Tensor Grad(Var v) const;
  Tensor ParamGrad(const Parameter& param) const;
  bool ParamUsed(const Parameter& param) const;

  const Tensor& value(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    bool requires_grad = false;
    bool leaf = false;
    BackwardFn backward;
    Tensor grad;
    bool has_grad = false;
  };

  Var Push(Node node);
  void CheckOwned(Var v) const;

  bool grad_enabled_;
  bool backward_done_ = false;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace avsr

#endif  // AVSR_NUMERICS_TAPE_H_
