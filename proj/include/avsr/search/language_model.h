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

#ifndef AVSR_SEARCH_LANGUAGE_MODEL_H_
#define AVSR_SEARCH_LANGUAGE_MODEL_H_

#include <string>
#include <vector>

#include "avsr/model/fusion_decoder.h"

namespace avsr {

// Consumed character ids; the leading sos is implicit.
using LmState = std::vector<int>;

// Character language model over the characters plus eos of a vocabulary.
class LanguageModel {
 public:
  explicit LanguageModel(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  virtual ~LanguageModel() = default;

  const Vocabulary& vocab() const { return vocab_; }
  // Log-probabilities over every id of the vocabulary for the token after
  // state; blank, sos and pad get -inf, the rest sum to one.
  virtual std::vector<double> NextLogProbs(const LmState& state) const = 0;
  // log p(token | state); writes the extended state. Throws ContractError for
  // blank, sos or pad, and for extending past eos.
  double Score(const LmState& state, int token, LmState* next) const;

 private:
  Vocabulary vocab_;
};

class UniformLM : public LanguageModel {
 public:
  using LanguageModel::LanguageModel;
  std::vector<double> NextLogProbs(const LmState& state) const override;
};

struct TinyLmConfig {
  int64_t num_blocks = 2;
  int64_t d_model = 64;
  int64_t n_head = 4;
  int64_t d_ff = 256;
  double dropout = 0.1;
};

// Causal transformer: embedding + sinusoidal positions, pre-norm blocks of
// masked self-attention and feed-forward, final norm, output projection.
class TinyTransformerLM : public LanguageModel {
 public:
  TinyTransformerLM(const Vocabulary& vocab, const TinyLmConfig& cfg, Rng& rng);

  // input starts with sos -> logits [len(input), vocab.size()].
  Var Logits(ForwardContext& ctx, const std::vector<int>& input) const;
  // Mean next-token cross-entropy of a character sequence (eos appended).
  Var Loss(ForwardContext& ctx, const std::vector<int>& ids) const;
  std::vector<double> NextLogProbs(const LmState& state) const override;
  void Register(ParamList& list, const std::string& prefix);

 private:
  struct Block {
    LayerNormLayer self_norm;
    MultiHeadAttention self_attn;
    FeedForward ffn;
  };
  TinyLmConfig cfg_;
  Parameter embedding_;
  std::vector<Block> blocks_;
  LayerNormLayer final_norm_;
  LinearLayer output_;
};

}  // namespace avsr

#endif  // AVSR_SEARCH_LANGUAGE_MODEL_H_
