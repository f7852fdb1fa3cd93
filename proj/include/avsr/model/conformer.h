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

#ifndef AVSR_MODEL_CONFORMER_H_
#define AVSR_MODEL_CONFORMER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avsr/numerics/nn.h"

namespace avsr {

struct ConformerConfig {
  int64_t num_blocks = 12;
  int64_t d_k = 256;
  int64_t d_v = 256;
  int64_t d_ff = 2048;
  int64_t n_head = 8;
  int64_t depthwise_kernel = 31;
  double dropout = 0.1;

  static ConformerConfig Full(int64_t heads = 8) {
    ConformerConfig c;
    c.n_head = heads;
    return c;
  }
  static ConformerConfig Desk() {
    ConformerConfig c;
    c.num_blocks = 2;
    c.d_k = 64;
    c.d_v = 64;
    c.d_ff = 256;
    c.n_head = 4;
    return c;
  }
  int64_t d_head() const { return d_k / n_head; }
  void Validate() const;
};

// Diagnostic tensors of one attention call, [H, T_q, T_k] each.
struct AttentionTrace {
  Tensor logits;   // scaled, pre-softmax (masked entries are -inf)
  Tensor weights;  // softmax rows
  // Relative-position term driven only by the learned global position bias,
  // scaled like the logits. Empty for attention without positions.
  Tensor position_bias_logits;
};

// Self-attention with Transformer-XL relative positions: the logit of query
// i and key j is ((q_i + u) . k_j + (q_i + v) . r_{i-j}) / sqrt(d_head), with
// r a projected sinusoid of the offset i - j.
struct RelativeSelfAttention {
  int64_t n_head = 1;
  double dropout = 0.0;
  LinearLayer query, key, value, out;
  LinearLayer pos;  // no bias
  Parameter pos_bias_u;  // [H, 1, d_head]
  Parameter pos_bias_v;  // [H, 1, d_head]

  RelativeSelfAttention() = default;
  RelativeSelfAttention(int64_t d_model, int64_t heads, double dropout_rate,
                        Rng& rng);
  Var Forward(ForwardContext& ctx, Var x, AttentionTrace* trace = nullptr) const;
  void Register(ParamList& list, const std::string& prefix);
};

// Pre-norm feed-forward branch: LN -> linear(d_ff) -> ReLU -> dropout ->
// linear(d_model). The residual is added by the caller.
struct FeedForward {
  double dropout = 0.0;
  LayerNormLayer norm;
  LinearLayer w1, w2;

  FeedForward() = default;
  FeedForward(int64_t d_model, int64_t d_ff, double dropout_rate, Rng& rng);
  Var Forward(ForwardContext& ctx, Var x) const;
  void Register(ParamList& list, const std::string& prefix);
};

// pointwise(2d) -> GLU -> depthwise -> batch norm -> swish -> pointwise ->
// layer norm. The residual is added by the caller.
struct ConvModule {
  double dropout = 0.0;
  LinearLayer pointwise1, pointwise2;
  Parameter depthwise;       // [d, K]
  Parameter depthwise_bias;  // [d]
  BatchNormLayer bn;
  LayerNormLayer norm;

  ConvModule() = default;
  ConvModule(int64_t d_model, int64_t kernel, double dropout_rate, Rng& rng);
  Var Forward(ForwardContext& ctx, Var x);
  // Batch-norm statistics are pooled over the batch.
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& xs);
  void Register(ParamList& list, const std::string& prefix);
};

struct ConformerBlock {
  FeedForward ffn1;
  LayerNormLayer attn_norm;
  RelativeSelfAttention attn;
  ConvModule conv;
  FeedForward ffn2;
  double dropout = 0.0;

  ConformerBlock() = default;
  ConformerBlock(const ConformerConfig& cfg, Rng& rng);
  Var Forward(ForwardContext& ctx, Var x, AttentionTrace* trace = nullptr);
  // trace, if given, records the attention of xs[0].
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& xs,
                                AttentionTrace* trace = nullptr);
  void Register(ParamList& list, const std::string& prefix);
};

// Linear embedding, stacked conformer blocks and a final layer norm.
class ConformerEncoder {
 public:
  ConformerEncoder() = default;
  ConformerEncoder(const ConformerConfig& cfg, int64_t input_dim, Rng& rng);

  const ConformerConfig& config() const { return cfg_; }
  // features: [T, input_dim] -> [T, d_k].
  Var Embed(ForwardContext& ctx, Var features) const;
  Var Forward(ForwardContext& ctx, Var features);
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& features);
  std::vector<ConformerBlock>& blocks() { return blocks_; }
  void Register(ParamList& list, const std::string& prefix);

 private:
  ConformerConfig cfg_;
  LinearLayer embed_;
  std::vector<ConformerBlock> blocks_;
  LayerNormLayer final_norm_;
};

}  // namespace avsr

#endif  // AVSR_MODEL_CONFORMER_H_
