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

// Label-synchronous joint CTC/attention beam search with shallow LM fusion.

#ifndef AVSR_SEARCH_BEAM_SEARCH_H_
#define AVSR_SEARCH_BEAM_SEARCH_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "avsr/model/fusion_decoder.h"
#include "avsr/search/ctc_prefix.h"
#include "avsr/search/language_model.h"

namespace avsr {

struct DecodeConfig {
  double ctc_weight = 0.1;  // lambda
  double lm_weight = 0.6;   // beta
  int beam = 10;
  // Maximum hypothesis length as a fraction of the encoder frames (>= 1).
  double max_len_ratio = 1.0;
  // Divide final scores by the token count including eos.
  bool length_normalize = true;
  int nbest = 0;  // 0 keeps the whole final beam

  void Validate() const;
};

struct BeamHypothesis {
  std::vector<int> tokens;  // sos-prefixed; ends with eos once finished
  double att_score = 0.0;
  double ctc_score = 0.0;
  double lm_score = 0.0;
  double total = 0.0;
  double final_score = 0.0;  // total, length-normalized if configured
  bool finished = false;
  std::shared_ptr<const CtcPrefixState> ctc_state;
  LmState lm_state;

  // Character ids without sos/eos.
  std::vector<int> Characters(const Vocabulary& vocab) const;
  int64_t NumCharacters(const Vocabulary& vocab) const;
};

struct DecodeResult {
  std::vector<BeamHypothesis> nbest;
  // No hypothesis emitted eos; nbest then holds the best partial ones.
  bool unterminated = false;
};

// Log-probabilities over all vocabulary ids for the token following an
// sos-prefixed prefix.
using AttentionScorer = std::function<std::vector<double>(const std::vector<int>&)>;

int64_t MaxOutputLength(const DecodeConfig& cfg, int64_t num_frames);

// ctc_log_probs: [T, V+1] lattice, may be empty when ctc_weight is 0;
// lm may be null when lm_weight is 0.
DecodeResult BeamSearch(const AttentionScorer& attention, const Tensor& ctc_log_probs,
                        int64_t num_frames, const DecodeConfig& cfg,
                        const Vocabulary& vocab, const LanguageModel* lm);

// Picks the best fused candidate at every step.
DecodeResult GreedySearch(const AttentionScorer& attention, const Tensor& ctc_log_probs,
                          int64_t num_frames, const DecodeConfig& cfg,
                          const Vocabulary& vocab, const LanguageModel* lm);

// Plain beam search over the attention decoder alone.
DecodeResult AttentionBeamSearch(const AttentionScorer& attention, int64_t num_frames,
                                 const DecodeConfig& cfg, const Vocabulary& vocab);

// One line per hypothesis: rank, score, lambda, beta, transcript.
std::string FormatNbest(const DecodeResult& result, const DecodeConfig& cfg,
                        const Vocabulary& vocab);

}  // namespace avsr

#endif  // AVSR_SEARCH_BEAM_SEARCH_H_
