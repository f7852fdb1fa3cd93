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

#include "avsr/search/language_model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avsr/objectives/losses.h"

namespace avsr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double LanguageModel::Score(const LmState& state, int token, LmState* next) const {
  if (!vocab_.IsChar(token) && token != vocab_.eos()) {
    throw ContractError(StrCat("language model cannot score token id ", token,
                               token == vocab_.blank() ? " (blank)" : ""));
  }
  if (!state.empty() && state.back() == vocab_.eos()) {
    throw ContractError("language model state already ended with eos");
  }
  const double lp = NextLogProbs(state)[static_cast<size_t>(token)];
  if (next != nullptr) {
    *next = state;
    next->push_back(token);
  }
  return lp;
}

std::vector<double> UniformLM::NextLogProbs(const LmState&) const {
  const Vocabulary& v = vocab();
  std::vector<double> lp(static_cast<size_t>(v.size()), kNegInf);
  const double u = -std::log(static_cast<double>(v.num_chars() + 1));
  for (int id = 1; id <= v.num_chars(); ++id) lp[id] = u;
  lp[v.eos()] = u;
  return lp;
}

TinyTransformerLM::TinyTransformerLM(const Vocabulary& vocab, const TinyLmConfig& cfg,
                                     Rng& rng)
    : LanguageModel(vocab), cfg_(cfg) {
  embedding_.value = RandomNormal({vocab.size(), cfg.d_model}, 1.0, rng);
  for (int64_t i = 0; i < cfg.num_blocks; ++i) {
    blocks_.push_back(Block{LayerNormLayer(cfg.d_model),
                            MultiHeadAttention(cfg.d_model, cfg.n_head, cfg.dropout, rng),
                            FeedForward(cfg.d_model, cfg.d_ff, cfg.dropout, rng)});
  }
  final_norm_ = LayerNormLayer(cfg.d_model);
  output_ = LinearLayer(cfg.d_model, vocab.size(), rng);
}

Var TinyTransformerLM::Logits(ForwardContext& ctx, const std::vector<int>& input) const {
  if (input.empty() || input.front() != vocab().sos()) {
    throw ContractError("language model input must start with sos");
  }
  std::vector<double> positions(input.size());
  for (size_t i = 0; i < input.size(); ++i) positions[i] = static_cast<double>(i);
  Var x = ops::Embedding(ctx.tape.Param(embedding_), input);
  x = ops::Add(x, ctx.tape.Constant(SinusoidalEncoding(positions, cfg_.d_model)
                                        .Cast(x.value().dtype())));
  x = ctx.Dropout(x, cfg_.dropout);
  for (const Block& b : blocks_) {
    Var h = b.self_norm.Forward(ctx, x);
    x = ops::Add(x, ctx.Dropout(b.self_attn.Forward(ctx, h, h, true), cfg_.dropout));
    x = ops::Add(x, ctx.Dropout(b.ffn.Forward(ctx, x), cfg_.dropout));
  }
  return output_.Forward(ctx, final_norm_.Forward(ctx, x));
}

Var TinyTransformerLM::Loss(ForwardContext& ctx, const std::vector<int>& ids) const {
  std::vector<int> input = {vocab().sos()};
  input.insert(input.end(), ids.begin(), ids.end());
  std::vector<int> target = ids;
  target.push_back(vocab().eos());
  return AttentionCrossEntropy(Logits(ctx, input), target, 0.0, Reduction::kMean);
}

std::vector<double> TinyTransformerLM::NextLogProbs(const LmState& state) const {
  Tape tape(/*grad_enabled=*/false);
  ForwardContext ctx{tape};
  std::vector<int> input = {vocab().sos()};
  input.insert(input.end(), state.begin(), state.end());
  const Tensor& logits = Logits(ctx, input).value();
  const int64_t K = logits.dim(1);
  const double* row = logits.data().data() + (logits.dim(0) - 1) * K;
  const Vocabulary& v = vocab();
  double mx = kNegInf;
  for (int id = 0; id < K; ++id) {
    if (v.IsChar(id) || id == v.eos()) mx = std::max(mx, row[id]);
  }
  double z = 0.0;
  for (int id = 0; id < K; ++id) {
    if (v.IsChar(id) || id == v.eos()) z += std::exp(row[id] - mx);
  }
  const double log_z = mx + std::log(z);
  std::vector<double> lp(static_cast<size_t>(K), kNegInf);
  for (int id = 0; id < K; ++id) {
    if (v.IsChar(id) || id == v.eos()) lp[id] = row[id] - log_z;
  }
  return lp;
}

void TinyTransformerLM::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "embedding"), embedding_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = Join(prefix, StrCat("block", i));
    blocks_[i].self_norm.Register(list, Join(p, "self_norm"));
    blocks_[i].self_attn.Register(list, Join(p, "self_attn"));
    blocks_[i].ffn.Register(list, Join(p, "ffn"));
  }
  final_norm_.Register(list, Join(prefix, "final_norm"));
  output_.Register(list, Join(prefix, "output"));
}

}  // namespace avsr
