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
// Decoding with a trained model: evaluation-mode encoder pass, then joint
// CTC/attention search over the decoder.

#ifndef AVSR_HARNESS_RECOGNIZER_H_
#define AVSR_HARNESS_RECOGNIZER_H_

#include <string>

#include "avsr/harness/model.h"
#include "avsr/search/beam_search.h"

namespace avsr {

struct EncodedUtterance {
  Tensor memory;         // [T, d]
  Tensor ctc_log_probs;  // [T, V + 1]
};

EncodedUtterance EncodeForDecoding(AvsrModel& model, const Sample& sample);

// Decoder log-probabilities for an encoded utterance; repeated prefixes are
// served from a cache.
AttentionScorer MakeAttentionScorer(const AvsrModel& model, const Tensor& memory);

enum class SearchKind { kBeam, kGreedy };

DecodeResult Recognize(AvsrModel& model, const Sample& sample, const DecodeConfig& cfg,
                       const LanguageModel* lm, SearchKind kind = SearchKind::kBeam);

// Best transcript, or "" when nothing was produced.
std::string BestTranscript(const DecodeResult& result, const Vocabulary& vocab);

}  // namespace avsr

#endif  // AVSR_HARNESS_RECOGNIZER_H_
