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

#include "avsr/model/fusion_decoder.h"

#include <cmath>
#include <limits>

namespace avsr {

Vocabulary::Vocabulary(const std::string& alphabet) : alphabet_(alphabet) {
  if (alphabet.empty()) throw ConfigError("empty alphabet");
  for (size_t i = 0; i < alphabet.size(); ++i) {
    const auto c = static_cast<unsigned char>(alphabet[i]);
    if (lookup_[c] != 0) {
      throw ConfigError(StrCat("alphabet repeats character '", alphabet[i], "'"));
    }
    lookup_[c] = static_cast<int>(i) + 1;
  }
}

std::vector<int> Vocabulary::Encode(const std::string& text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char ch : text) {
    const int id = lookup_[static_cast<unsigned char>(ch)];
    if (id == 0) {
      throw ContractError(StrCat("character '", ch, "' is not in the alphabet \"",
                                 alphabet_, "\""));
    }
    ids.push_back(id);
  }
  return ids;
}

std::string Vocabulary::Decode(const std::vector<int>& ids) const {
  std::string s;
  for (int id : ids) {
    if (IsChar(id)) s.push_back(alphabet_[static_cast<size_t>(id - 1)]);
  }
  return s;
}

void TokenSequence::Validate(const Vocabulary& vocab, int64_t max_length) const {
  const auto n = static_cast<int64_t>(ids.size());
  if (n < 1 || n > max_length) {
    throw ContractError(StrCat("target length ", n, " outside [1, ", max_length, "]"));
  }
  for (int id : ids) {
    if (!vocab.IsChar(id)) {
      throw ContractError(StrCat("target id ", id, " is not a character id"));
    }
  }
}

std::vector<int> TokenSequence::DecoderInput(const Vocabulary& vocab) const {
  std::vector<int> v = {vocab.sos()};
  v.insert(v.end(), ids.begin(), ids.end());
  return v;
}

std::vector<int> TokenSequence::DecoderTarget(const Vocabulary& vocab) const {
  std::vector<int> v = ids;
  v.push_back(vocab.eos());
  return v;
}

// ---------------------------------------------------------------------------

FusionMlp::FusionMlp(int64_t d_model, Rng& rng)
    : in_proj(2 * d_model, 4 * d_model, rng),
      out_proj(4 * d_model, d_model, rng),
      bn(4 * d_model) {}

Var FusionMlp::Forward(ForwardContext& ctx, Var audio, Var visual) {
  return ForwardBatch(ctx, {audio}, {visual})[0];
}

std::vector<Var> FusionMlp::ForwardBatch(ForwardContext& ctx,
                                         const std::vector<Var>& audio,
                                         const std::vector<Var>& visual) {
  if (audio.size() != visual.size()) {
    throw ShapeError(StrCat("fusion got ", audio.size(), " audio and ", visual.size(),
                            " visual streams"));
  }
  std::vector<Var> joined;
  for (size_t i = 0; i < audio.size(); ++i) {
    const Var& a = audio[i];
    const Var& v = visual[i];
    if (a.rank() != 2 || v.rank() != 2) {
      throw ShapeError("fusion expects [T, d] streams");
    }
    if (a.dim(0) != v.dim(0)) {
      throw ShapeError(StrCat("stream alignment: audio has ", a.dim(0),
                              " frames, visual has ", v.dim(0)));
    }
    if (a.dim(1) + v.dim(1) != in_proj.in_features()) {
      throw ShapeError(StrCat("fusion expects stream dims summing to ",
                              in_proj.in_features(), ", got ", a.dim(1), " + ",
                              v.dim(1)));
    }
    joined.push_back(ops::Concat({a, v}, 1));
  }
  // Every op is per frame, so the batch runs as one [sum T, 2d] matrix.
  const std::vector<int64_t> lengths = BatchLengths(joined, 0);
  Var h = in_proj.Forward(ctx, ConcatBatch(joined, 0));
  h = ops::Relu(bn.Forward(ctx, h, 1));
  return SplitBatch(out_proj.Forward(ctx, h), 0, lengths);
}

void FusionMlp::Register(ParamList& list, const std::string& prefix) {
  in_proj.Register(list, Join(prefix, "in_proj"));
  bn.Register(list, Join(prefix, "bn"));
  out_proj.Register(list, Join(prefix, "out_proj"));
}

// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(int64_t d_model, int64_t heads,
                                       double dropout_rate, Rng& rng)
    : n_head(heads),
      dropout(dropout_rate),
      query(d_model, d_model, rng),
      key(d_model, d_model, rng),
      value(d_model, d_model, rng),
      out(d_model, d_model, rng) {
  if (d_model % heads != 0) {
    throw ConfigError(StrCat("model dim ", d_model, " not divisible by ", heads,
                             " heads"));
  }
}

Var MultiHeadAttention::Forward(ForwardContext& ctx, Var q_in, Var memory,
                                bool causal, AttentionTrace* trace) const {
  const int64_t Tq = q_in.dim(0), Tk = memory.dim(0), d = q_in.dim(1);
  const int64_t H = n_head, dh = d / H;
  if (memory.dim(1) != d) {
    throw ShapeError(StrCat("attention memory ", ShapeString(memory.shape()),
                            " does not match query ", ShapeString(q_in.shape())));
  }
  Var q = ops::Permute(ops::Reshape(query.Forward(ctx, q_in), {Tq, H, dh}), {1, 0, 2});
  Var k = ops::Permute(ops::Reshape(key.Forward(ctx, memory), {Tk, H, dh}), {1, 2, 0});
  Var v = ops::Permute(ops::Reshape(value.Forward(ctx, memory), {Tk, H, dh}), {1, 0, 2});
  Var logits = ops::Scale(ops::MatMul(q, k), 1.0 / std::sqrt(static_cast<double>(dh)));
  if (causal) {
    Tensor mask({1, Tq, Tk}, q_in.value().dtype());
    for (int64_t i = 0; i < Tq; ++i) {
      for (int64_t j = i + 1; j < Tk; ++j) {
        mask[i * Tk + j] = -std::numeric_limits<double>::infinity();
      }
    }
    logits = ops::Add(logits, ctx.tape.Constant(std::move(mask)));
  }
  Var weights = ops::Softmax(logits, 2);
  if (trace != nullptr) {
    trace->logits = logits.value();
    trace->weights = weights.value();
  }
  weights = ctx.Dropout(weights, dropout);
  Var o = ops::Reshape(ops::Permute(ops::MatMul(weights, v), {1, 0, 2}), {Tq, d});
  return out.Forward(ctx, o);
}

void MultiHeadAttention::Register(ParamList& list, const std::string& prefix) {
  query.Register(list, Join(prefix, "query"));
  key.Register(list, Join(prefix, "key"));
  value.Register(list, Join(prefix, "value"));
  out.Register(list, Join(prefix, "out"));
}

// ---------------------------------------------------------------------------

void DecoderConfig::Validate() const {
  if (num_blocks < 1) throw ConfigError("decoder needs at least one block");
  if (d_model < 1 || n_head < 1 || d_model % n_head != 0) {
    throw ConfigError(StrCat("decoder dim ", d_model, " must be a multiple of ",
                             n_head, " heads"));
  }
  if (d_ff < 1) throw ConfigError("decoder d_ff must be positive");
}

DecoderBlock::DecoderBlock(const DecoderConfig& cfg, Rng& rng)
    : self_norm(cfg.d_model),
      cross_norm(cfg.d_model),
      self_attn(cfg.d_model, cfg.n_head, cfg.dropout, rng),
      cross_attn(cfg.d_model, cfg.n_head, cfg.dropout, rng),
      ffn(cfg.d_model, cfg.d_ff, cfg.dropout, rng),
      dropout(cfg.dropout) {}

Var DecoderBlock::Forward(ForwardContext& ctx, Var x, Var memory,
                          AttentionTrace* cross_trace) const {
  Var h = self_norm.Forward(ctx, x);
  x = ops::Add(x, ctx.Dropout(self_attn.Forward(ctx, h, h, /*causal=*/true), dropout));
  h = cross_norm.Forward(ctx, x);
  x = ops::Add(x, ctx.Dropout(cross_attn.Forward(ctx, h, memory, false, cross_trace),
                              dropout));
  return ops::Add(x, ctx.Dropout(ffn.Forward(ctx, x), dropout));
}

void DecoderBlock::Register(ParamList& list, const std::string& prefix) {
  self_norm.Register(list, Join(prefix, "self_norm"));
  self_attn.Register(list, Join(prefix, "self_attn"));
  cross_norm.Register(list, Join(prefix, "cross_norm"));
  cross_attn.Register(list, Join(prefix, "cross_attn"));
  ffn.Register(list, Join(prefix, "ffn"));
}

TransformerDecoder::TransformerDecoder(const DecoderConfig& cfg,
                                       const Vocabulary& vocab, Rng& rng)
    : cfg_(cfg), vocab_(vocab) {
  cfg_.Validate();
  embedding_.value = RandomNormal({vocab.size(), cfg.d_model}, 1.0, rng);
  for (int64_t i = 0; i < cfg.num_blocks; ++i) blocks_.emplace_back(cfg, rng);
  final_norm_ = LayerNormLayer(cfg.d_model);
  output_ = LinearLayer(cfg.d_model, vocab.size(), rng);
}

Var TransformerDecoder::Embed(ForwardContext& ctx, const std::vector<int>& prefix) const {
  if (prefix.empty()) throw ContractError("decoder prefix is empty");
  if (prefix.front() != vocab_.sos()) {
    throw ContractError("decoder prefix must start with sos");
  }
  std::vector<double> positions(prefix.size());
  for (size_t i = 0; i < prefix.size(); ++i) {
    const int id = prefix[i];
    if (i > 0 && !vocab_.IsChar(id)) {
      throw ContractError(StrCat("decoder prefix holds non-character id ", id,
                                 " at position ", i));
    }
    positions[i] = static_cast<double>(i);
  }
  Var tokens = ops::Embedding(ctx.tape.Param(embedding_), prefix);
  Tensor pe = SinusoidalEncoding(positions, cfg_.d_model).Cast(tokens.value().dtype());
  return ops::Add(tokens, ctx.tape.Constant(std::move(pe)));
}

Var TransformerDecoder::Forward(ForwardContext& ctx, const std::vector<int>& prefix,
                                Var memory,
                                std::vector<AttentionTrace>* cross_traces) const {
  if (memory.rank() != 2 || memory.dim(1) != cfg_.d_model) {
    throw ShapeError(StrCat("decoder memory must be [T, ", cfg_.d_model, "], got ",
                            ShapeString(memory.shape())));
  }
  Var x = ctx.Dropout(Embed(ctx, prefix), cfg_.dropout);
  if (cross_traces != nullptr) cross_traces->assign(blocks_.size(), {});
  for (size_t i = 0; i < blocks_.size(); ++i) {
    x = blocks_[i].Forward(ctx, x, memory,
                           cross_traces != nullptr ? &(*cross_traces)[i] : nullptr);
  }
  return output_.Forward(ctx, final_norm_.Forward(ctx, x));
}

void TransformerDecoder::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "embedding"), embedding_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].Register(list, Join(prefix, StrCat("block", i)));
  }
  final_norm_.Register(list, Join(prefix, "final_norm"));
  output_.Register(list, Join(prefix, "output"));
}

}  // namespace avsr
