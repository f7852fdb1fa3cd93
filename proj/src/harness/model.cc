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
#include "avsr/harness/model.h"

#include <sstream>

#include "avsr/objectives/losses.h"

namespace avsr {

Modality ParseModality(const std::string& s) {
  if (s == "a") return Modality::kAudio;
  if (s == "v") return Modality::kVisual;
  if (s == "av") return Modality::kAudioVisual;
  throw ConfigError(StrCat("unknown modality '", s, "' (expected a, v or av)"));
}

std::string ModalityName(Modality m) {
  switch (m) {
    case Modality::kAudio: return "a";
    case Modality::kVisual: return "v";
    case Modality::kAudioVisual: return "av";
  }
  return "?";
}

DecoderConfig ModelConfig::decoder() const {
  DecoderConfig d = DecoderConfig::FromEncoder(encoder);
  d.num_blocks = decoder_blocks;
  return d;
}

void ModelConfig::Validate() const {
  frontend.Validate();
  encoder.Validate();
  decoder().Validate();
  Vocabulary check(alphabet);
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw ConfigError(StrCat("label_smoothing must be in [0, 1), got ", label_smoothing));
  }
}

std::string ModelConfig::Fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "modality=" << ModalityName(modality) << "\n"
     << "alphabet=" << alphabet << "\n"
     << "frontend_channels=" << frontend.channels[0] << "," << frontend.channels[1]
     << "," << frontend.channels[2] << "," << frontend.channels[3] << "\n"
     << "audio_kernel=" << frontend.audio_kernel << "\n"
     << "audio_stride=" << frontend.audio_stride << "\n"
     << "audio_pool=" << frontend.audio_pool << "\n"
     << "encoder_blocks=" << encoder.num_blocks << "\n"
     << "d_k=" << encoder.d_k << "\n"
     << "d_v=" << encoder.d_v << "\n"
     << "d_ff=" << encoder.d_ff << "\n"
     << "heads=" << encoder.n_head << "\n"
     << "conv_kernel=" << encoder.depthwise_kernel << "\n"
     << "dropout=" << encoder.dropout << "\n"
     << "decoder_blocks=" << decoder_blocks << "\n"
     << "label_smoothing=" << label_smoothing << "\n";
  return os.str();
}

ModelConfig ModelConfig::FromConfig(KeyValueConfig& kv) {
  ModelConfig c;
  c.modality = ParseModality(kv.GetString("modality", ModalityName(c.modality)));
  c.alphabet = kv.GetString("alphabet", c.alphabet);
  const auto& ch = c.frontend.channels;
  const std::vector<double> channels = kv.GetDoubleList(
      "frontend_channels", {double(ch[0]), double(ch[1]), double(ch[2]), double(ch[3])});
  if (channels.size() != 4) throw ConfigError("frontend_channels needs 4 values");
  for (int i = 0; i < 4; ++i) c.frontend.channels[i] = static_cast<int64_t>(channels[i]);
  c.frontend.audio_kernel = kv.GetInt("audio_kernel", c.frontend.audio_kernel);
  c.frontend.audio_stride = kv.GetInt("audio_stride", c.frontend.audio_stride);
  c.frontend.audio_pool = kv.GetInt("audio_pool", c.frontend.audio_pool);
  c.encoder.num_blocks = kv.GetInt("encoder_blocks", c.encoder.num_blocks);
  c.encoder.d_k = kv.GetInt("d_k", c.encoder.d_k);
  c.encoder.d_v = kv.GetInt("d_v", c.encoder.d_v);
  c.encoder.d_ff = kv.GetInt("d_ff", c.encoder.d_ff);
  c.encoder.n_head = kv.GetInt("heads", c.encoder.n_head);
  c.encoder.depthwise_kernel = kv.GetInt("conv_kernel", c.encoder.depthwise_kernel);
  c.encoder.dropout = kv.GetDouble("dropout", c.encoder.dropout);
  c.decoder_blocks = kv.GetInt("decoder_blocks", c.decoder_blocks);
  c.label_smoothing = kv.GetDouble("label_smoothing", c.label_smoothing);
  c.seed = static_cast<uint64_t>(kv.GetInt("seed", static_cast<int64_t>(c.seed)));
  c.Validate();
  return c;
}

int64_t Sample::num_frames() const {
  if (!frames.empty()) return frames.dim(0);
  return audio.size() / 640;
}

AvsrModel::AvsrModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  vocab_ = Vocabulary(cfg_.alphabet);
  Rng rng(cfg_.seed);
  const int64_t d = cfg_.encoder.d_k;
  if (cfg_.uses_audio()) {
    audio_frontend_ = AudioFrontend(cfg_.frontend, rng);
    audio_encoder_ = ConformerEncoder(cfg_.encoder, cfg_.frontend.feature_dim(), rng);
  }
  if (cfg_.uses_video()) {
    visual_frontend_ = VisualFrontend(cfg_.frontend, rng);
    visual_encoder_ = ConformerEncoder(cfg_.encoder, cfg_.frontend.feature_dim(), rng);
  }
  if (cfg_.modality == Modality::kAudioVisual) fusion_ = FusionMlp(d, rng);
  ctc_head_ = LinearLayer(d, vocab_.num_chars() + 1, rng);
  decoder_ = TransformerDecoder(cfg_.decoder(), vocab_, rng);

  if (cfg_.uses_audio()) {
    audio_frontend_.Register(params_, "audio_frontend");
    audio_encoder_.Register(params_, "audio_encoder");
  }
  if (cfg_.uses_video()) {
    visual_frontend_.Register(params_, "visual_frontend");
    visual_encoder_.Register(params_, "visual_encoder");
  }
  if (cfg_.modality == Modality::kAudioVisual) fusion_.Register(params_, "fusion");
  ctc_head_.Register(params_, "ctc_head");
  decoder_.Register(params_, "decoder");
}

DType AvsrModel::dtype() const { return params_.params.front().second->value.dtype(); }

Var AvsrModel::Input(ForwardContext& ctx, const Tensor& t) const {
  return ctx.tape.Constant(t.dtype() == dtype() ? t : t.Cast(dtype()));
}

EncoderOutput AvsrModel::Encode(ForwardContext& ctx, const Sample& s) {
  return EncodeBatch(ctx, {&s})[0];
}

std::vector<EncoderOutput> AvsrModel::EncodeBatch(ForwardContext& ctx,
                                                  const std::vector<const Sample*>& batch) {
  std::vector<Var> a, v;
  if (cfg_.uses_audio()) {
    for (const Sample* s : batch) {
      if (s->audio.empty()) throw ContractError(StrCat("sample '", s->id, "' has no audio"));
      a.push_back(Input(ctx, s->audio));
    }
    a = audio_encoder_.ForwardBatch(ctx, audio_frontend_.ForwardBatch(ctx, a));
  }
  if (cfg_.uses_video()) {
    for (const Sample* s : batch) {
      if (s->frames.empty()) {
        throw ContractError(StrCat("sample '", s->id, "' has no frames"));
      }
      v.push_back(Input(ctx, s->frames));
    }
    v = visual_encoder_.ForwardBatch(ctx, visual_frontend_.ForwardBatch(ctx, v));
  }
  std::vector<Var> memory;
  switch (cfg_.modality) {
    case Modality::kAudio: memory = a; break;
    case Modality::kVisual: memory = v; break;
    case Modality::kAudioVisual: memory = fusion_.ForwardBatch(ctx, a, v); break;
  }
  std::vector<EncoderOutput> out;
  for (const Var& m : memory) {
    out.push_back({m, ops::LogSoftmax(ctc_head_.Forward(ctx, m), 1)});
  }
  return out;
}

Var AvsrModel::DecoderLogits(ForwardContext& ctx, const std::vector<int>& prefix,
                             Var memory) const {
  return decoder_.Forward(ctx, prefix, memory);
}

LossBreakdown AvsrModel::Loss(ForwardContext& ctx, const Sample& s, double alpha) {
  return LossBatch(ctx, {&s}, alpha)[0];
}

std::vector<LossBreakdown> AvsrModel::LossBatch(ForwardContext& ctx,
                                                const std::vector<const Sample*>& batch,
                                                double alpha) {
  for (const Sample* s : batch) TokenSequence{s->target}.Validate(vocab_, 1 << 20);
  const std::vector<EncoderOutput> enc = EncodeBatch(ctx, batch);
  std::vector<LossBreakdown> out(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const TokenSequence seq{batch[i]->target};
    Var ctc = alpha > 0.0 ? CtcLogLikelihood(enc[i].ctc_log_probs, seq.ids)
                          : ctx.tape.Constant(Tensor::Scalar(0.0));
    Var logits = decoder_.Forward(ctx, seq.DecoderInput(vocab_), enc[i].memory);
    Var ce = AttentionCrossEntropy(logits, seq.DecoderTarget(vocab_),
                                   cfg_.label_smoothing, Reduction::kSum);
    out[i].loss = HybridLoss(ctc, ops::Neg(ce), alpha);
    out[i].ctc_ll = ctc.value().item();
    out[i].ce = ce.value().item();
  }
  return out;
}

}  // namespace avsr
