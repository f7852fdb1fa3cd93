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
// Waveform normalization, noise mixing, time masking, band rejection, speed
// perturbation, video cropping/flipping and frame normalization.

#ifndef AVSR_DATAFLOW_AUGMENT_H_
#define AVSR_DATAFLOW_AUGMENT_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "avsr/common/keyvalue.h"
#include "avsr/dataflow/media.h"

namespace avsr {

struct AugmentPolicy {
  std::vector<double> snr_levels_db = {-5, 0, 5, 10, 15, 20};
  bool include_clean = true;  // the clean branch is one more equiprobable level
  int n_time_masks = 2;
  double max_mask_seconds = 0.4;
  int n_band_rejects = 2;
  double max_band_hz = 150.0;
  double speed_min = 0.9;
  double speed_max = 1.1;
  int64_t crop = 88;
  double hflip_prob = 0.5;
  // Stages of the audio pipeline.
  bool use_noise = true;
  bool use_time_mask = true;
  bool use_band_reject = true;
  bool use_speed = true;

  void Validate() const;
  // Reads the keys named like the fields above; unknown keys are left for
  // the caller's CheckAllConsumed.
  static AugmentPolicy FromConfig(KeyValueConfig& cfg);
};

double MeanSquare(const std::vector<double>& x);
double SnrDb(const std::vector<double>& signal, const std::vector<double>& noise);

// Zero mean, unit (population) standard deviation. DegenerateInputError for
// a constant clip.
AudioClip NormalizeWaveform(const AudioClip& clip);

// clean + g * noise with g chosen so that the mean-square power ratio is
// snr_db. The noise is read from noise_offset onwards and looped if short.
// snr_db = +inf returns clean unchanged. DegenerateInputError for silent
// noise or silent clean audio.
AudioClip MixAtSnr(const AudioClip& clean, const AudioClip& noise, double snr_db,
                   int64_t noise_offset = 0);

struct TimeMaskInfo {
  bool skipped = false;  // clip shorter than the longest mask
  std::vector<std::pair<int64_t, int64_t>> spans;  // [start, start + length)
};
AudioClip TimeMask(const AudioClip& clip, const AugmentPolicy& policy, uint64_t seed,
                   TimeMaskInfo* info = nullptr);

struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
};
// Zeroes every DFT bin whose frequency lies in one of the bands.
AudioClip RejectBands(const AudioClip& clip, const std::vector<Band>& bands);
AudioClip BandReject(const AudioClip& clip, const AugmentPolicy& policy, uint64_t seed,
                     std::vector<Band>* bands = nullptr);

// Linear-interpolation resampling to round(N / factor) samples; ConfigError
// for a factor outside [0.9, 1.1].
AudioClip SpeedPerturb(const AudioClip& clip, double factor);

struct AudioAugmentInfo {
  double snr_db = 0.0;  // +inf for the clean branch
  TimeMaskInfo masks;
  std::vector<Band> bands;
  double speed = 1.0;
};
// noise mixing -> time masks -> band rejection -> speed perturbation, each
// stage enabled by the policy.
AudioClip AugmentAudio(const AudioClip& clip, const AudioClip& noise,
                       const AugmentPolicy& policy, uint64_t seed,
                       AudioAugmentInfo* info = nullptr);

struct VideoAugmentInfo {
  int64_t offset_y = 0;
  int64_t offset_x = 0;
  bool flipped = false;
};
// Training: one random crop offset and one flip draw for the whole clip.
// Evaluation: centre crop, no flip. ShapeError for frames smaller than the
// crop.
VideoClip AugmentVideo(const VideoClip& clip, const AugmentPolicy& policy, uint64_t seed,
                       bool training, VideoAugmentInfo* info = nullptr);
VideoClip FlipHorizontal(const VideoClip& clip);
VideoClip Crop(const VideoClip& clip, int64_t y, int64_t x, int64_t size);

// Pixel mean and standard deviation of a (training) split.
struct FrameStats {
  double mean = 0.0;
  double stddev = 1.0;
};
class FrameStatsAccumulator {
 public:
  void Add(const VideoClip& clip);
  FrameStats Finish() const;

 private:
  double count_ = 0.0, sum_ = 0.0, sum_sq_ = 0.0;
};
VideoClip NormalizeFrames(const VideoClip& clip, const FrameStats& stats);

}  // namespace avsr

#endif  // AVSR_DATAFLOW_AUGMENT_H_
