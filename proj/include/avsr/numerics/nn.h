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

// Parameterized layers shared by the model modules, plus the per-pass
// context that carries the tape, mode, dropout RNG and batch-norm updates.

#ifndef AVSR_NUMERICS_NN_H_
#define AVSR_NUMERICS_NN_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "avsr/numerics/ops.h"
#include "avsr/numerics/tape.h"

namespace avsr {

using Rng = std::mt19937_64;

// Named views of every parameter and persistent buffer in a model, in a
// fixed registration order.
struct ParamList {
  std::vector<std::pair<std::string, Parameter*>> params;
  std::vector<std::pair<std::string, Tensor*>> buffers;

  void Add(const std::string& name, Parameter& p) {
    p.name = name;
    params.emplace_back(name, &p);
  }
  void AddBuffer(const std::string& name, Tensor& t) {
    buffers.emplace_back(name, &t);
  }
  int64_t NumScalars() const;
};

inline std::string Join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

// Running statistics of one batch-norm layer.
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  // [1] tensor so that it serializes with the other buffers; 0 means no
  // statistics have been recorded yet.
  Tensor num_updates = Tensor({1});
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(int64_t channels = 1);
  bool has_stats() const { return num_updates[0] > 0; }
  // Marks the state as recorded with mean 0 and variance 1.
  void ResetToIdentity();
  // running = (1 - momentum) * running + momentum * batch
  void Update(const Tensor& batch_mean, const Tensor& batch_var_unbiased);
};

struct BatchNormUpdate {
  BatchNormState* state = nullptr;
  Tensor mean;
  Tensor var_unbiased;
};

// Per-pass state. The tape is single-writer; batch-norm running-statistic
// updates are either applied immediately or queued in `bn_updates` so that
// the caller can apply them in a deterministic order.
struct ForwardContext {
  Tape& tape;
  bool training = false;
  Rng* rng = nullptr;
  std::vector<BatchNormUpdate>* bn_updates = nullptr;
  // Overrides every dropout rate when >= 0 (gradient checks use 0).
  double dropout_override = -1.0;

  double DropoutRate(double configured) const {
    if (!training) return 0.0;
    return dropout_override >= 0.0 ? dropout_override : configured;
  }
  Var Dropout(Var x, double configured_rate);
};

void ApplyBatchNormUpdates(const std::vector<BatchNormUpdate>& updates);

// Batch normalization over every axis except `channel_axis`. Training mode
// normalizes by the batch statistics (biased variance) and reports the batch
// mean and unbiased variance for the running averages; evaluation mode is the
// affine map given by the running statistics.
Var BatchNormOp(ForwardContext& ctx, Var x, Var gamma, Var beta,
                BatchNormState& state, int channel_axis);

// ---------------------------------------------------------------------------
// Layers

struct LinearLayer {
  Parameter weight;  // [in, out]
  Parameter bias;    // [out]
  bool has_bias = true;

  LinearLayer() = default;
  LinearLayer(int64_t in, int64_t out, Rng& rng, bool with_bias = true);
  int64_t in_features() const { return weight.value.dim(0); }
  int64_t out_features() const { return weight.value.dim(1); }
  Var Forward(ForwardContext& ctx, Var x) const;
  void Register(ParamList& list, const std::string& prefix);
};

struct LayerNormLayer {
  Parameter gain;
  Parameter bias;
  double eps = 1e-5;

  LayerNormLayer() = default;
  explicit LayerNormLayer(int64_t dim);
  Var Forward(ForwardContext& ctx, Var x) const;
  void Register(ParamList& list, const std::string& prefix);
};

struct BatchNormLayer {
  Parameter gamma;
  Parameter beta;
  BatchNormState state;

  BatchNormLayer() = default;
  explicit BatchNormLayer(int64_t channels);
  Var Forward(ForwardContext& ctx, Var x, int channel_axis);
  // One set of statistics for the whole group: the inputs are joined along
  // concat_axis, normalized together and split back.
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& xs,
                                int channel_axis, int concat_axis);
  void Register(ParamList& list, const std::string& prefix);
};

// Concat along axis, and its inverse.
Var ConcatBatch(const std::vector<Var>& xs, int axis);
std::vector<Var> SplitBatch(Var x, int axis, const std::vector<int64_t>& lengths);
std::vector<int64_t> BatchLengths(const std::vector<Var>& xs, int axis);

// ---------------------------------------------------------------------------
// Initialization

Tensor HeNormal(Shape shape, int64_t fan_in, Rng& rng);
Tensor XavierUniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng);
Tensor RandomNormal(Shape shape, double stddev, Rng& rng);
Tensor RandomUniform(Shape shape, double lo, double hi, Rng& rng);

// Sinusoidal encoding of (possibly negative) positions: row r holds
// sin/cos of positions[r] at geometrically spaced frequencies.
Tensor SinusoidalEncoding(const std::vector<double>& positions, int64_t dim);

// Casts every parameter to dtype (buffers stay float64).
void CastParameters(ParamList& list, DType dtype);

}  // namespace avsr

#endif  // AVSR_NUMERICS_NN_H_
