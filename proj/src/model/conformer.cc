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

#include "avsr/model/conformer.h"

#include <cmath>

namespace avsr {

void ConformerConfig::Validate() const {
  if (num_blocks < 1) throw ConfigError("conformer needs at least one block (e >= 1)");
  if (d_k < 1 || n_head < 1 || d_k % n_head != 0) {
    throw ConfigError(StrCat("d_k=", d_k, " must be a positive multiple of n_head=",
                             n_head));
  }
  if (d_v != d_k) throw ConfigError(StrCat("d_v=", d_v, " must equal d_k=", d_k));
  if (d_ff < 1) throw ConfigError("d_ff must be positive");
  if (depthwise_kernel < 1 || depthwise_kernel % 2 == 0) {
    throw ConfigError(StrCat("depthwise kernel ", depthwise_kernel, " must be odd"));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

// ---------------------------------------------------------------------------

RelativeSelfAttention::RelativeSelfAttention(int64_t d_model, int64_t heads,
                                             double dropout_rate, Rng& rng)
    : n_head(heads),
      dropout(dropout_rate),
      query(d_model, d_model, rng),
      key(d_model, d_model, rng),
      value(d_model, d_model, rng),
      out(d_model, d_model, rng),
      pos(d_model, d_model, rng, /*with_bias=*/false) {
  if (d_model % heads != 0) {
    throw ConfigError(StrCat("model dim ", d_model, " not divisible by ", heads,
                             " heads"));
  }
  const int64_t dh = d_model / heads;
  const double a = std::sqrt(6.0 / static_cast<double>(dh + 1));
  pos_bias_u.value = RandomUniform({heads, 1, dh}, -a, a, rng);
  pos_bias_v.value = RandomUniform({heads, 1, dh}, -a, a, rng);
}

Var RelativeSelfAttention::Forward(ForwardContext& ctx, Var x,
                                   AttentionTrace* trace) const {
  if (x.rank() != 2) {
    throw ShapeError(StrCat("self-attention expects [T, d], got ",
                            ShapeString(x.shape())));
  }
  Tape& tape = ctx.tape;
  const int64_t T = x.dim(0), d = x.dim(1), H = n_head, dh = d / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Var q = ops::Permute(ops::Reshape(query.Forward(ctx, x), {T, H, dh}), {1, 0, 2});
  Var k = ops::Permute(ops::Reshape(key.Forward(ctx, x), {T, H, dh}), {1, 2, 0});
  Var v = ops::Permute(ops::Reshape(value.Forward(ctx, x), {T, H, dh}), {1, 0, 2});

  // Column c of the relative table encodes the offset c - (T - 1).
  std::vector<double> offsets(static_cast<size_t>(2 * T - 1));
  for (int64_t c = 0; c < 2 * T - 1; ++c) offsets[c] = static_cast<double>(c - (T - 1));
  Var table = tape.Constant(SinusoidalEncoding(offsets, d).Cast(x.value().dtype()));
  Var p = ops::Permute(ops::Reshape(pos.Forward(ctx, table), {2 * T - 1, H, dh}),
                       {1, 2, 0});

  Var u_bias = tape.Param(pos_bias_u);
  Var v_bias = tape.Param(pos_bias_v);
  Var content = ops::MatMul(ops::Add(q, u_bias), k);
  Var position = ops::RelShift(ops::MatMul(ops::Add(q, v_bias), p));
  Var logits = ops::Scale(ops::Add(content, position), scale);
  Var weights = ops::Softmax(logits, 2);
  if (trace != nullptr) {
    trace->logits = logits.value();
    trace->weights = weights.value();
    const Tensor& pv = p.value();
    const Tensor& vb = pos_bias_v.value;
    Tensor bias_logits({H, T, T});
    for (int64_t h = 0; h < H; ++h) {
      for (int64_t i = 0; i < T; ++i) {
        for (int64_t j = 0; j < T; ++j) {
          const int64_t c = i - j + T - 1;
          double s = 0.0;
          for (int64_t e = 0; e < dh; ++e) {
            s += vb[h * dh + e] * pv[(h * dh + e) * (2 * T - 1) + c];
          }
          bias_logits[(h * T + i) * T + j] = s * scale;
        }
      }
    }
    trace->position_bias_logits = std::move(bias_logits);
  }
  weights = ctx.Dropout(weights, dropout);
  Var o = ops::Reshape(ops::Permute(ops::MatMul(weights, v), {1, 0, 2}), {T, d});
  return out.Forward(ctx, o);
}

void RelativeSelfAttention::Register(ParamList& list, const std::string& prefix) {
  query.Register(list, Join(prefix, "query"));
  key.Register(list, Join(prefix, "key"));
  value.Register(list, Join(prefix, "value"));
  out.Register(list, Join(prefix, "out"));
  pos.Register(list, Join(prefix, "pos"));
  list.Add(Join(prefix, "pos_bias_u"), pos_bias_u);
  list.Add(Join(prefix, "pos_bias_v"), pos_bias_v);
}

// ---------------------------------------------------------------------------

FeedForward::FeedForward(int64_t d_model, int64_t d_ff, double dropout_rate,
                         Rng& rng)
    : dropout(dropout_rate),
      norm(d_model),
      w1(d_model, d_ff, rng),
      w2(d_ff, d_model, rng) {}

Var FeedForward::Forward(ForwardContext& ctx, Var x) const {
  Var h = ops::Relu(w1.Forward(ctx, norm.Forward(ctx, x)));
  h = ctx.Dropout(h, dropout);
  return w2.Forward(ctx, h);
}

void FeedForward::Register(ParamList& list, const std::string& prefix) {
  norm.Register(list, Join(prefix, "norm"));
  w1.Register(list, Join(prefix, "w1"));
  w2.Register(list, Join(prefix, "w2"));
}

// ---------------------------------------------------------------------------

ConvModule::ConvModule(int64_t d_model, int64_t kernel, double dropout_rate,
                       Rng& rng)
    : dropout(dropout_rate),
      pointwise1(d_model, 2 * d_model, rng),
      pointwise2(d_model, d_model, rng),
      bn(d_model),
      norm(d_model) {
  if (kernel % 2 == 0) {
    throw ConfigError(StrCat("depthwise kernel ", kernel, " must be odd"));
  }
  depthwise.value = HeNormal({d_model, kernel}, kernel, rng);
  depthwise_bias.value = Tensor({d_model});
}

Var ConvModule::Forward(ForwardContext& ctx, Var x) {
  return ForwardBatch(ctx, {x})[0];
}

std::vector<Var> ConvModule::ForwardBatch(ForwardContext& ctx,
                                          const std::vector<Var>& xs) {
  std::vector<Var> h;
  for (const Var& x : xs) {
    h.push_back(ops::DepthwiseConv1d(ops::Glu(pointwise1.Forward(ctx, x)),
                                     ctx.tape.Param(depthwise),
                                     ctx.tape.Param(depthwise_bias)));
  }
  h = bn.ForwardBatch(ctx, h, 1, 0);
  for (Var& v : h) {
    v = norm.Forward(ctx, pointwise2.Forward(ctx, ops::Swish(v)));
    v = ctx.Dropout(v, dropout);
  }
  return h;
}

void ConvModule::Register(ParamList& list, const std::string& prefix) {
  pointwise1.Register(list, Join(prefix, "pointwise1"));
  list.Add(Join(prefix, "depthwise"), depthwise);
  list.Add(Join(prefix, "depthwise_bias"), depthwise_bias);
  bn.Register(list, Join(prefix, "bn"));
  pointwise2.Register(list, Join(prefix, "pointwise2"));
  norm.Register(list, Join(prefix, "norm"));
}

// ---------------------------------------------------------------------------

ConformerBlock::ConformerBlock(const ConformerConfig& cfg, Rng& rng)
    : ffn1(cfg.d_k, cfg.d_ff, cfg.dropout, rng),
      attn_norm(cfg.d_k),
      attn(cfg.d_k, cfg.n_head, cfg.dropout, rng),
      conv(cfg.d_k, cfg.depthwise_kernel, cfg.dropout, rng),
      ffn2(cfg.d_k, cfg.d_ff, cfg.dropout, rng),
      dropout(cfg.dropout) {}

Var ConformerBlock::Forward(ForwardContext& ctx, Var x, AttentionTrace* trace) {
  return ForwardBatch(ctx, {x}, trace)[0];
}

std::vector<Var> ConformerBlock::ForwardBatch(ForwardContext& ctx,
                                              const std::vector<Var>& xs,
                                              AttentionTrace* trace) {
  std::vector<Var> h = xs;
  for (size_t i = 0; i < h.size(); ++i) {
    Var& x = h[i];
    x = ops::Add(x, ops::Scale(ctx.Dropout(ffn1.Forward(ctx, x), dropout), 0.5));
    x = ops::Add(x, ctx.Dropout(attn.Forward(ctx, attn_norm.Forward(ctx, x),
                                             i == 0 ? trace : nullptr),
                                dropout));
  }
  std::vector<Var> c = conv.ForwardBatch(ctx, h);
  for (size_t i = 0; i < h.size(); ++i) {
    Var& x = h[i];
    x = ops::Add(x, c[i]);
    x = ops::Add(x, ops::Scale(ctx.Dropout(ffn2.Forward(ctx, x), dropout), 0.5));
  }
  return h;
}

void ConformerBlock::Register(ParamList& list, const std::string& prefix) {
  ffn1.Register(list, Join(prefix, "ffn1"));
  attn_norm.Register(list, Join(prefix, "attn_norm"));
  attn.Register(list, Join(prefix, "attn"));
  conv.Register(list, Join(prefix, "conv"));
  ffn2.Register(list, Join(prefix, "ffn2"));
}

// ---------------------------------------------------------------------------

ConformerEncoder::ConformerEncoder(const ConformerConfig& cfg, int64_t input_dim,
                                   Rng& rng)
    : cfg_(cfg) {
  cfg_.Validate();
  embed_ = LinearLayer(input_dim, cfg.d_k, rng);
  for (int64_t i = 0; i < cfg.num_blocks; ++i) blocks_.emplace_back(cfg, rng);
  final_norm_ = LayerNormLayer(cfg.d_k);
}

Var ConformerEncoder::Embed(ForwardContext& ctx, Var features) const {
  if (features.rank() != 2 || features.dim(1) != embed_.in_features()) {
    throw ShapeError(StrCat("encoder expects [T, ", embed_.in_features(),
                            "] features, got ", ShapeString(features.shape())));
  }
  return embed_.Forward(ctx, features);
}

Var ConformerEncoder::Forward(ForwardContext& ctx, Var features) {
  return ForwardBatch(ctx, {features})[0];
}

std::vector<Var> ConformerEncoder::ForwardBatch(ForwardContext& ctx,
                                                const std::vector<Var>& features) {
  std::vector<Var> h;
  for (const Var& f : features) h.push_back(ctx.Dropout(Embed(ctx, f), cfg_.dropout));
  for (ConformerBlock& b : blocks_) h = b.ForwardBatch(ctx, h);
  for (Var& v : h) v = final_norm_.Forward(ctx, v);
  return h;
}

void ConformerEncoder::Register(ParamList& list, const std::string& prefix) {
  embed_.Register(list, Join(prefix, "embed"));
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].Register(list, Join(prefix, StrCat("block", i)));
  }
  final_norm_.Register(list, Join(prefix, "final_norm"));
}

}  // namespace avsr
