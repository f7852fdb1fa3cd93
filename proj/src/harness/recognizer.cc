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
#include "avsr/harness/recognizer.h"

#include <cmath>
#include <map>
#include <memory>

namespace avsr {

EncodedUtterance EncodeForDecoding(AvsrModel& model, const Sample& sample) {
  Tape tape(false);
  ForwardContext ctx{tape};
  EncoderOutput enc = model.Encode(ctx, sample);
  return {enc.memory.value(), enc.ctc_log_probs.value()};
}

AttentionScorer MakeAttentionScorer(const AvsrModel& model, const Tensor& memory) {
  auto cache = std::make_shared<std::map<std::vector<int>, std::vector<double>>>();
  return [&model, memory, cache](const std::vector<int>& prefix) {
    auto it = cache->find(prefix);
    if (it != cache->end()) return it->second;
    Tape tape(false);
    ForwardContext ctx{tape};
    const Tensor& logits = model.DecoderLogits(ctx, prefix, tape.Constant(memory)).value();
    const int64_t k = logits.dim(1), last = logits.dim(0) - 1;
    std::vector<double> lp(static_cast<size_t>(k));
    double mx = -INFINITY;
    for (int64_t j = 0; j < k; ++j) mx = std::max(mx, logits[last * k + j]);
    double s = 0.0;
    for (int64_t j = 0; j < k; ++j) s += std::exp(logits[last * k + j] - mx);
    const double lse = mx + std::log(s);
    for (int64_t j = 0; j < k; ++j) lp[static_cast<size_t>(j)] = logits[last * k + j] - lse;
    cache->emplace(prefix, lp);
    return lp;
  };
}

DecodeResult Recognize(AvsrModel& model, const Sample& sample, const DecodeConfig& cfg,
                       const LanguageModel* lm, SearchKind kind) {
  const EncodedUtterance enc = EncodeForDecoding(model, sample);
  const AttentionScorer att = MakeAttentionScorer(model, enc.memory);
  const int64_t frames = enc.memory.dim(0);
  if (kind == SearchKind::kGreedy) {
    return GreedySearch(att, enc.ctc_log_probs, frames, cfg, model.vocab(), lm);
  }
  return BeamSearch(att, enc.ctc_log_probs, frames, cfg, model.vocab(), lm);
}

std::string BestTranscript(const DecodeResult& result, const Vocabulary& vocab) {
  return result.nbest.empty() ? std::string() : vocab.Decode(result.nbest.front().tokens);
}

}  // namespace avsr
