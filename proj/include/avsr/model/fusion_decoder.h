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

#ifndef AVSR_MODEL_FUSION_DECODER_H_
#define AVSR_MODEL_FUSION_DECODER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avsr/model/conformer.h"
#include "avsr/numerics/nn.h"

namespace avsr {

// Character vocabulary. Id 0 is the CTC blank, characters take 1..V and the
// specials follow: sos = V+1, eos = V+2, pad = V+3.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws ConfigError on an empty or repeated alphabet.
  explicit Vocabulary(const std::string& alphabet);

  static std::string DefaultAlphabet() { return "abcdefghijklmnopqrstuvwxyz0123456789 '"; }

  int num_chars() const { return static_cast<int>(alphabet_.size()); }
  int size() const { return num_chars() + 4; }
  int blank() const { return 0; }
  int sos() const { return num_chars() + 1; }
  int eos() const { return num_chars() + 2; }
  int pad() const { return num_chars() + 3; }
  bool IsChar(int id) const { return id >= 1 && id <= num_chars(); }
  const std::string& alphabet() const { return alphabet_; }

  // Throws ContractError on characters outside the alphabet.
  std::vector<int> Encode(const std::string& text) const;
  // Skips non-character ids.
  std::string Decode(const std::vector<int>& ids) const;

 private:
  std::string alphabet_;
  int lookup_[256] = {};
};

// Target character ids (no specials) with a configured length bound.
struct TokenSequence {
  std::vector<int> ids;

  // Throws ContractError unless 1 <= length <= max_length and every id is a
  // character of vocab.
  void Validate(const Vocabulary& vocab, int64_t max_length) const;
  std::vector<int> DecoderInput(const Vocabulary& vocab) const;   // sos + ids
  std::vector<int> DecoderTarget(const Vocabulary& vocab) const;  // ids + eos
};

// concat -> linear(4d) -> batch norm -> ReLU -> linear(d), per frame.
struct FusionMlp {
  LinearLayer in_proj, out_proj;
  BatchNormLayer bn;

  FusionMlp() = default;
  FusionMlp(int64_t d_model, Rng& rng);
  // Throws ShapeError naming both lengths when they differ.
  Var Forward(ForwardContext& ctx, Var audio, Var visual);
  // Batch-norm statistics are pooled over the batch.
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& audio,
                                const std::vector<Var>& visual);
  void Register(ParamList& list, const std::string& prefix);
};

// Standard multi-head attention, optionally with a causal mask.
struct MultiHeadAttention {
  int64_t n_head = 1;
  double dropout = 0.0;
  LinearLayer query, key, value, out;

  MultiHeadAttention() = default;
  MultiHeadAttention(int64_t d_model, int64_t heads, double dropout_rate, Rng& rng);
  // query: [Tq, d], memory: [Tk, d] -> [Tq, d].
  Var Forward(ForwardContext& ctx, Var q_in, Var memory, bool causal,
              AttentionTrace* trace = nullptr) const;
  void Register(ParamList& list, const std::string& prefix);
};

struct DecoderConfig {
  int64_t num_blocks = 6;
  int64_t d_model = 256;
  int64_t n_head = 8;
  int64_t d_ff = 2048;
  double dropout = 0.1;

  static DecoderConfig FromEncoder(const ConformerConfig& enc) {
    DecoderConfig c;
    c.d_model = enc.d_k;
    c.n_head = enc.n_head;
    c.d_ff = enc.d_ff;
    c.dropout = enc.dropout;
    return c;
  }
  void Validate() const;
};

struct DecoderBlock {
  LayerNormLayer self_norm, cross_norm;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;
  double dropout = 0.0;

  DecoderBlock() = default;
  DecoderBlock(const DecoderConfig& cfg, Rng& rng);
  Var Forward(ForwardContext& ctx, Var x, Var memory,
              AttentionTrace* cross_trace = nullptr) const;
  void Register(ParamList& list, const std::string& prefix);
};

class TransformerDecoder {
 public:
  TransformerDecoder() = default;
  TransformerDecoder(const DecoderConfig& cfg, const Vocabulary& vocab, Rng& rng);

  // Token embedding plus sinusoidal absolute positions: [l, d].
  Var Embed(ForwardContext& ctx, const std::vector<int>& prefix) const;
  // prefix starts with sos; returns logits [l, vocab.size()] where row i
  // depends on prefix[0..i] only.
  Var Forward(ForwardContext& ctx, const std::vector<int>& prefix, Var memory,
              std::vector<AttentionTrace>* cross_traces = nullptr) const;
  void Register(ParamList& list, const std::string& prefix);
  const DecoderConfig& config() const { return cfg_; }

 private:
  DecoderConfig cfg_;
  Vocabulary vocab_;
  Parameter embedding_;  // [vocab, d]
  std::vector<DecoderBlock> blocks_;
  LayerNormLayer final_norm_;
  LinearLayer output_;
};

}  // namespace avsr

#endif  // AVSR_MODEL_FUSION_DECODER_H_
