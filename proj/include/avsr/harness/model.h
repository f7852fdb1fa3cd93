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

// The full recognizer: per-modality front-end and conformer encoder, MLP
// fusion for the audio-visual variant, a CTC head and the attention decoder.

#ifndef AVSR_HARNESS_MODEL_H_
#define AVSR_HARNESS_MODEL_H_

#include <memory>
#include <string>
#include <vector>

#include "avsr/common/keyvalue.h"
#include "avsr/model/conformer.h"
#include "avsr/model/frontends.h"
#include "avsr/model/fusion_decoder.h"

namespace avsr {

enum class Modality { kAudio, kVisual, kAudioVisual };

// "a", "v" or "av"; ConfigError otherwise.
Modality ParseModality(const std::string& s);
std::string ModalityName(Modality m);

struct ModelConfig {
  Modality modality = Modality::kAudioVisual;
  std::string alphabet = Vocabulary::DefaultAlphabet();
  FrontendConfig frontend = FrontendConfig::Desk();
  ConformerConfig encoder = ConformerConfig::Desk();
  int64_t decoder_blocks = 6;
  double label_smoothing = 0.1;
  uint64_t seed = 0;

  DecoderConfig decoder() const;
  bool uses_audio() const { return modality != Modality::kVisual; }
  bool uses_video() const { return modality != Modality::kAudio; }
  void Validate() const;
  // Canonical key=value text; equal strings mean interchangeable weights.
  std::string Fingerprint() const;
  // Reads the keys written by Fingerprint (plus "seed"), starting from the
  // desk preset.
  static ModelConfig FromConfig(KeyValueConfig& cfg);
};

// One training or test example. Either stream may be empty when the model
// does not use it.
struct Sample {
  std::string id;
  Tensor audio;   // [N] normalized waveform
  Tensor frames;  // [T, H, W] normalized intensities
  std::vector<int> target;  // character ids
  int64_t num_frames() const;
};

struct EncoderOutput {
  Var memory;         // [T, d]
  Var ctc_log_probs;  // [T, V + 1], column 0 is blank
};

struct LossBreakdown {
  Var loss;
  double ctc_ll = 0.0;  // log p_ctc
  double ce = 0.0;      // attention cross-entropy (positive, summed)
};

class AvsrModel {
 public:
  explicit AvsrModel(const ModelConfig& cfg);
  AvsrModel(const AvsrModel&) = delete;
  AvsrModel& operator=(const AvsrModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }

  EncoderOutput Encode(ForwardContext& ctx, const Sample& s);
  // In training mode batch-norm statistics are pooled over the batch.
  std::vector<EncoderOutput> EncodeBatch(ForwardContext& ctx,
                                         const std::vector<const Sample*>& batch);
  Var DecoderLogits(ForwardContext& ctx, const std::vector<int>& prefix,
                    Var memory) const;
  // alpha * log p_ctc + (1 - alpha) * log p_ce, negated. Throws
  // InfeasibleSampleError when the CTC term is -inf and alpha > 0.
  LossBreakdown Loss(ForwardContext& ctx, const Sample& s, double alpha);
  std::vector<LossBreakdown> LossBatch(ForwardContext& ctx,
                                       const std::vector<const Sample*>& batch,
                                       double alpha);

  ParamList& params() { return params_; }
  // dtype of the parameters; inputs are cast to it.
  DType dtype() const;

 private:
  Var Input(ForwardContext& ctx, const Tensor& t) const;

  ModelConfig cfg_;
  Vocabulary vocab_;
  AudioFrontend audio_frontend_;
  VisualFrontend visual_frontend_;
  ConformerEncoder audio_encoder_;
  ConformerEncoder visual_encoder_;
  FusionMlp fusion_;
  LinearLayer ctc_head_;
  TransformerDecoder decoder_;
  ParamList params_;
};

}  // namespace avsr

#endif  // AVSR_HARNESS_MODEL_H_
