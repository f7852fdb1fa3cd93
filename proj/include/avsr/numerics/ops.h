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

// Differentiable operations over Vars. Axes are always non-negative.

#ifndef AVSR_NUMERICS_OPS_H_
#define AVSR_NUMERICS_OPS_H_

#include <cstdint>
#include <random>
#include <vector>

#include "avsr/numerics/tape.h"

namespace avsr::ops {

// While one is alive on the current thread, Relu and MaxPool2d fold the
// branch taken for every element into signature(). Two forward passes with
// equal signatures ran on the same linear piece of those ops.
class KinkRecorder {
 public:
  KinkRecorder();
  ~KinkRecorder();
  KinkRecorder(const KinkRecorder&) = delete;
  KinkRecorder& operator=(const KinkRecorder&) = delete;

  uint64_t signature() const { return hash_; }
  static KinkRecorder* Active();
  void Mix(uint64_t v) { hash_ = (hash_ ^ v) * 0x100000001b3ULL; }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ULL;
  KinkRecorder* previous_;
};

// Elementwise with numpy-style broadcasting (shapes aligned on the right).
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);

Var Scale(Var x, double factor);
Var AddScalar(Var x, double value);
Var Neg(Var x);
Var Exp(Var x);
Var Log(Var x);
Var Sigmoid(Var x);
Var Relu(Var x);
Var Swish(Var x);
Var Square(Var x);

// Sum or mean of every element, as a [1] tensor.
Var Sum(Var x);
Var Mean(Var x);
// Reduces the listed axes, which are removed from the result shape.
Var SumAxes(Var x, const std::vector<int>& axes);
Var MeanAxes(Var x, const std::vector<int>& axes);

// a[..., m, k] x b[..., k, n]; leading batch extents broadcast.
Var MatMul(Var a, Var b);

Var Reshape(Var x, Shape shape);
Var Permute(Var x, const std::vector<int>& perm);
Var Transpose(Var x, int axis0, int axis1);
Var Concat(const std::vector<Var>& xs, int axis);
Var Slice(Var x, int axis, int64_t start, int64_t length);

Var LogSoftmax(Var x, int axis);
Var Softmax(Var x, int axis);

// Normalizes over the last axis; gain and bias have the last axis extent.
Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);

// Cross-correlation (no kernel flip). x: [N, C_in, S...], weight:
// [C_out, C_in, K...] with 1 to 3 spatial axes. Bias may be unbound.
Var ConvNd(Var x, Var weight, Var bias, const std::vector<int64_t>& stride,
           const std::vector<int64_t>& padding);
// x: [C_in, L] -> [C_out, L_out].
Var Conv1d(Var x, Var weight, Var bias, int64_t stride, int64_t padding);
// x: [N, C_in, H, W] -> [N, C_out, H_out, W_out].
Var Conv2d(Var x, Var weight, Var bias, int64_t stride, int64_t padding);
// x: [C_in, T, H, W] -> [C_out, T_out, H_out, W_out].
Var Conv3d(Var x, Var weight, Var bias, const std::vector<int64_t>& stride,
           const std::vector<int64_t>& padding);

int64_t ConvOutputLength(int64_t length, int64_t kernel, int64_t stride,
                         int64_t padding);

// x: [T, C], weight: [C, K] with odd K, same padding along T.
Var DepthwiseConv1d(Var x, Var weight, Var bias);

// Splits the last axis in halves a|b and returns a * sigmoid(b).
Var Glu(Var x);

// x: [N, C, H, W].
Var MaxPool2d(Var x, int64_t kernel, int64_t stride, int64_t padding);
// x: [C, L].
Var AvgPool1d(Var x, int64_t kernel, int64_t stride);

// Rows of table [V, d] selected by ids -> [n, d].
Var Embedding(Var table, const std::vector<int>& ids);
// x: [N, V] -> [N] with x[i, ids[i]].
Var Pick(Var x, const std::vector<int>& ids);

// Relative-position gather: x [H, T, 2T-1] indexed by offset (i - j) + T - 1
// -> [H, T, T].
Var RelShift(Var x);

// Inverted dropout: surviving entries are scaled by 1 / (1 - rate).
Var Dropout(Var x, double rate, std::mt19937_64& rng);

// Convenience: x [.., in] * weight [in, out] + bias [out].
Var Linear(Var x, Var weight, Var bias);

}  // namespace avsr::ops

#endif  // AVSR_NUMERICS_OPS_H_
