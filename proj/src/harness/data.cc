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
#include "avsr/harness/data.h"

#include <cmath>
#include <random>
#include <sstream>

#include "avsr/common/keyvalue.h"
#include "avsr/common/seed.h"

namespace avsr {

FrameStats ComputeFrameStats(const Manifest& train) {
  FrameStatsAccumulator acc;
  for (const ManifestRecord& r : train.records) {
    if (!r.frames_path.empty()) acc.Add(ReadFrames(r.frames_path));
  }
  return acc.Finish();
}

std::string DataFingerprint(const DataOptions& options) {
  std::ostringstream os;
  os.precision(17);
  os << "frame_mean=" << options.frame_stats.mean << "\nframe_std=" << options.frame_stats.stddev
     << "\ncrop=" << options.policy.crop << "\n";
  return os.str();
}

void ApplyDataFingerprint(const std::string& text, DataOptions& options) {
  if (text.empty()) return;
  KeyValueConfig kv = KeyValueConfig::Parse(text, "checkpoint data config");
  options.frame_stats.mean = kv.GetDouble("frame_mean", options.frame_stats.mean);
  options.frame_stats.stddev = kv.GetDouble("frame_std", options.frame_stats.stddev);
  options.policy.crop = kv.GetInt("crop", options.policy.crop);
  kv.CheckAllConsumed();
}

Dataset::Dataset(const Manifest& manifest, const Vocabulary& vocab, DataOptions options)
    : vocab_(vocab), options_(std::move(options)) {
  options_.policy.Validate();
  manifest.Validate(vocab_);
  const bool audio = options_.modality != Modality::kVisual;
  const bool video = options_.modality != Modality::kAudio;
  for (const ManifestRecord& r : manifest.records) {
    if ((audio && r.wav_path.empty()) || (video && r.frames_path.empty())) {
      throw ContractError(StrCat("utterance '", r.id, "' lacks a stream needed by modality ",
                                 ModalityName(options_.modality)));
    }
    const int64_t frames = !r.frames_path.empty() ? ReadFrameCount(r.frames_path)
                                                  : ReadWav(r.wav_path).size() / 640;
    if (frames > options_.max_frames) {
      ++excluded_;
      continue;
    }
    records_.push_back(r);
  }
}

Sample Dataset::Load(size_t i, bool training, uint64_t seed) const {
  const ManifestRecord& r = records_.at(i);
  Sample s;
  s.id = r.id;
  s.target = vocab_.Encode(r.transcript);
  std::mt19937_64 rng(seed);
  const uint64_t audio_seed = rng(), video_seed = rng(), noise_seed = rng();
  if (options_.modality != Modality::kVisual) {
    AudioClip clip = ReadWav(r.wav_path);
    if (training && options_.augment) {
      AugmentPolicy p = options_.policy;
      // Speed changes the duration, which only an audio-only model tolerates.
      p.use_speed = p.use_speed && options_.modality == Modality::kAudio;
      if (p.use_noise && options_.noise.samples.empty()) p.use_noise = false;
      clip = AugmentAudio(clip, options_.noise, p, audio_seed);
    } else if (!training && std::isfinite(options_.test_snr_db)) {
      if (options_.noise.samples.empty()) {
        throw ContractError("test-time noise requested without a noise clip");
      }
      const int64_t offset = static_cast<int64_t>(noise_seed % options_.noise.samples.size());
      clip = MixAtSnr(clip, options_.noise, options_.test_snr_db, offset);
    }
    s.audio = NormalizeWaveform(clip).ToTensor();
  }
  if (options_.modality != Modality::kAudio) {
    VideoClip v = AugmentVideo(ReadFrames(r.frames_path), options_.policy, video_seed,
                               training && options_.augment);
    s.frames = NormalizeFrames(v, options_.frame_stats).ToTensor();
  }
  return s;
}

}  // namespace avsr
