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

#include "avsr/numerics/nn.h"

#include <cmath>
#include <memory>

namespace avsr {

int64_t ParamList::NumScalars() const {
  int64_t n = 0;
  for (const auto& [name, p] : params) n += p->value.size();
  return n;
}

BatchNormState::BatchNormState(int64_t channels)
    : running_mean({channels}), running_var(Tensor::Full({channels}, 1.0)) {}

void BatchNormState::ResetToIdentity() {
  running_mean.Fill(0.0);
  running_var.Fill(1.0);
  num_updates[0] = 1;
}

void BatchNormState::Update(const Tensor& batch_mean,
                            const Tensor& batch_var_unbiased) {
  if (!batch_mean.SameShape(running_mean) ||
      !batch_var_unbiased.SameShape(running_var)) {
    throw ShapeError("BatchNormState::Update: statistic shape mismatch");
  }
  for (int64_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * batch_mean[c];
    running_var[c] =
        (1.0 - momentum) * running_var[c] + momentum * batch_var_unbiased[c];
  }
  num_updates[0] += 1;
}

void ApplyBatchNormUpdates(const std::vector<BatchNormUpdate>& updates) {
  for (const BatchNormUpdate& u : updates) u.state->Update(u.mean, u.var_unbiased);
}

Var ForwardContext::Dropout(Var x, double configured_rate) {
  const double rate = DropoutRate(configured_rate);
  if (rate <= 0.0) return x;
  if (rng == nullptr) throw ContractError("dropout in training needs an RNG");
  return ops::Dropout(x, rate, *rng);
}

Var BatchNormOp(ForwardContext& ctx, Var x, Var gamma, Var beta,
                BatchNormState& state, int channel_axis) {
  Tape& tape = ctx.tape;
  const Tensor& vx = x.value();
  if (channel_axis < 0 || channel_axis >= vx.rank()) {
    throw ShapeError(StrCat("BatchNorm channel axis ", channel_axis,
                            " invalid for ", ShapeString(vx.shape())));
  }
  const int64_t C = vx.dim(channel_axis);
  if (gamma.value().size() != C || beta.value().size() != C ||
      state.running_mean.size() != C) {
    throw ShapeError(StrCat("BatchNorm expects ", C, " channels for input ",
                            ShapeString(vx.shape())));
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < channel_axis; ++i) outer *= vx.dim(i);
  for (int i = channel_axis + 1; i < vx.rank(); ++i) inner *= vx.dim(i);
  const int64_t count = outer * inner;
  const double eps = state.eps;
  auto mean = std::make_shared<std::vector<double>>(C, 0.0);
  auto inv = std::make_shared<std::vector<double>>(C, 0.0);
  const bool training = ctx.training;
  if (training) {
    if (count < 2) {
      throw ContractError(StrCat("BatchNorm training needs more than one "
                                 "element per channel, input ",
                                 ShapeString(vx.shape())));
    }
    Tensor bmean({C}), bvar({C});
    for (int64_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (int64_t o = 0; o < outer; ++o) {
        const double* p = vx.data().data() + (o * C + c) * inner;
        for (int64_t i = 0; i < inner; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (int64_t o = 0; o < outer; ++o) {
        const double* p = vx.data().data() + (o * C + c) * inner;
        for (int64_t i = 0; i < inner; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      (*mean)[c] = mu;
      (*inv)[c] = 1.0 / std::sqrt(ss / static_cast<double>(count) + eps);
      bmean[c] = mu;
      bvar[c] = ss / static_cast<double>(count - 1);
    }
    BatchNormUpdate upd{&state, std::move(bmean), std::move(bvar)};
    if (ctx.bn_updates) {
      ctx.bn_updates->push_back(std::move(upd));
    } else {
      state.Update(upd.mean, upd.var_unbiased);
    }
  } else {
    if (!state.has_stats()) {
      throw InitializationError(
          "BatchNorm evaluation before any running statistics were recorded");
    }
    for (int64_t c = 0; c < C; ++c) {
      (*mean)[c] = state.running_mean[c];
      (*inv)[c] = 1.0 / std::sqrt(state.running_var[c] + eps);
    }
  }
  const Tensor& vg = gamma.value();
  const Tensor& vb = beta.value();
  Tensor out(vx.shape(), PromoteTypes(vx.dtype(), vg.dtype()));
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t c = 0; c < C; ++c) {
      const double* p = vx.data().data() + (o * C + c) * inner;
      double* q = out.data().data() + (o * C + c) * inner;
      const double a = (*inv)[c] * vg[c];
      const double b = vb[c] - (*mean)[c] * a;
      for (int64_t i = 0; i < inner; ++i) q[i] = p[i] * a + b;
    }
  }
  return tape.Record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, mean, inv, outer, inner, C, count, training](
          Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& vx = x.value();
        const Tensor& vg = gamma.value();
        Tensor gx(vx.shape()), gg({C}), gb({C});
        for (int64_t c = 0; c < C; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (int64_t o = 0; o < outer; ++o) {
            const double* p = vx.data().data() + (o * C + c) * inner;
            const double* pg = g.data().data() + (o * C + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              const double xhat = (p[i] - (*mean)[c]) * (*inv)[c];
              sum_g += pg[i];
              sum_gx += pg[i] * xhat;
            }
          }
          gg[c] = sum_gx;
          gb[c] = sum_g;
          const double n = static_cast<double>(count);
          for (int64_t o = 0; o < outer; ++o) {
            const double* p = vx.data().data() + (o * C + c) * inner;
            const double* pg = g.data().data() + (o * C + c) * inner;
            double* q = gx.data().data() + (o * C + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              if (training) {
                const double xhat = (p[i] - (*mean)[c]) * (*inv)[c];
                q[i] = vg[c] * (*inv)[c] / n * (n * pg[i] - sum_g - xhat * sum_gx);
              } else {
                q[i] = vg[c] * (*inv)[c] * pg[i];
              }
            }
          }
        }
        t.Accumulate(x, std::move(gx));
        t.Accumulate(gamma, std::move(gg));
        t.Accumulate(beta, std::move(gb));
      });
}

// ---------------------------------------------------------------------------

LinearLayer::LinearLayer(int64_t in, int64_t out, Rng& rng, bool with_bias)
    : has_bias(with_bias) {
  weight.value = XavierUniform({in, out}, in, out, rng);
  bias.value = Tensor({out});
}

Var LinearLayer::Forward(ForwardContext& ctx, Var x) const {
  Var w = ctx.tape.Param(weight);
  Var b = has_bias ? ctx.tape.Param(bias) : Var();
  return ops::Linear(x, w, b);
}

void LinearLayer::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "weight"), weight);
  if (has_bias) list.Add(Join(prefix, "bias"), bias);
}

LayerNormLayer::LayerNormLayer(int64_t dim) {
  gain.value = Tensor::Full({dim}, 1.0);
  bias.value = Tensor({dim});
}

Var LayerNormLayer::Forward(ForwardContext& ctx, Var x) const {
  return ops::LayerNorm(x, ctx.tape.Param(gain), ctx.tape.Param(bias), eps);
}

void LayerNormLayer::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "gain"), gain);
  list.Add(Join(prefix, "bias"), bias);
}

BatchNormLayer::BatchNormLayer(int64_t channels) : state(channels) {
  gamma.value = Tensor::Full({channels}, 1.0);
  beta.value = Tensor({channels});
  state.ResetToIdentity();
}

Var BatchNormLayer::Forward(ForwardContext& ctx, Var x, int channel_axis) {
  return BatchNormOp(ctx, x, ctx.tape.Param(gamma), ctx.tape.Param(beta), state,
                     channel_axis);
}

std::vector<Var> BatchNormLayer::ForwardBatch(ForwardContext& ctx,
                                              const std::vector<Var>& xs,
                                              int channel_axis, int concat_axis) {
  if (xs.size() == 1) return {Forward(ctx, xs[0], channel_axis)};
  Var y = Forward(ctx, ConcatBatch(xs, concat_axis), channel_axis);
  return SplitBatch(y, concat_axis, BatchLengths(xs, concat_axis));
}

Var ConcatBatch(const std::vector<Var>& xs, int axis) {
  return xs.size() == 1 ? xs[0] : ops::Concat(xs, axis);
}

std::vector<Var> SplitBatch(Var x, int axis, const std::vector<int64_t>& lengths) {
  if (lengths.size() == 1) return {x};
  std::vector<Var> out;
  int64_t start = 0;
  for (int64_t n : lengths) {
    out.push_back(ops::Slice(x, axis, start, n));
    start += n;
  }
  return out;
}

std::vector<int64_t> BatchLengths(const std::vector<Var>& xs, int axis) {
  std::vector<int64_t> n;
  for (const Var& x : xs) n.push_back(x.dim(axis));
  return n;
}

void BatchNormLayer::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "gamma"), gamma);
  list.Add(Join(prefix, "beta"), beta);
  list.AddBuffer(Join(prefix, "running_mean"), state.running_mean);
  list.AddBuffer(Join(prefix, "running_var"), state.running_var);
  list.AddBuffer(Join(prefix, "num_updates"), state.num_updates);
}

// ---------------------------------------------------------------------------

Tensor HeNormal(Shape shape, int64_t fan_in, Rng& rng) {
  return RandomNormal(std::move(shape),
                      std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
}

Tensor XavierUniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return RandomUniform(std::move(shape), -a, a, rng);
}

Tensor RandomNormal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, stddev);
  for (double& v : t.data()) v = d(rng);
  return t;
}

Tensor RandomUniform(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.data()) v = d(rng);
  return t;
}

Tensor SinusoidalEncoding(const std::vector<double>& positions, int64_t dim) {
  Tensor t({static_cast<int64_t>(positions.size()), dim});
  for (size_t r = 0; r < positions.size(); ++r) {
    for (int64_t i = 0; i < dim; i += 2) {
      const double freq =
          std::exp(-std::log(10000.0) * static_cast<double>(i) /
                   static_cast<double>(dim));
      const double angle = positions[r] * freq;
      t[static_cast<int64_t>(r) * dim + i] = std::sin(angle);
      if (i + 1 < dim) t[static_cast<int64_t>(r) * dim + i + 1] = std::cos(angle);
    }
  }
  return t;
}

void CastParameters(ParamList& list, DType dtype) {
  for (auto& [name, p] : list.params) p->value = p->value.Cast(dtype);
}

}  // namespace avsr
