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
// Turns manifest records into model-ready samples: waveform normalization,
// optional training augmentation, test-time noise, centre or random crops and
// frame normalization with training-split statistics.

#ifndef AVSR_HARNESS_DATA_H_
#define AVSR_HARNESS_DATA_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "avsr/dataflow/augment.h"
#include "avsr/dataflow/manifest.h"
#include "avsr/harness/model.h"

namespace avsr {

struct DataOptions {
  Modality modality = Modality::kAudioVisual;
  FrameStats frame_stats;
  AugmentPolicy policy;          // crop size applies in every mode
  bool augment = false;          // training-time augmentation
  AudioClip noise;               // mixing source for augmentation and test noise
  double test_snr_db = std::numeric_limits<double>::infinity();
  int64_t max_frames = 600;      // longer utterances are excluded
};

// Pixel statistics of every frame in a (training) manifest.
FrameStats ComputeFrameStats(const Manifest& train);

// Frame statistics and crop size as key=value lines, and the inverse.
std::string DataFingerprint(const DataOptions& options);
void ApplyDataFingerprint(const std::string& text, DataOptions& options);

class Dataset {
 public:
  Dataset() = default;
  // Validates the manifest against vocab and drops utterances longer than
  // max_frames on the 25 fps timeline.
  Dataset(const Manifest& manifest, const Vocabulary& vocab, DataOptions options);

  size_t size() const { return records_.size(); }
  int64_t excluded() const { return excluded_; }
  const ManifestRecord& record(size_t i) const { return records_.at(i); }
  const DataOptions& options() const { return options_; }
  DataOptions& options() { return options_; }

  // training selects augmentation (when enabled) and random crops; seed
  // drives every random choice for this utterance.
  Sample Load(size_t i, bool training, uint64_t seed) const;

 private:
  std::vector<ManifestRecord> records_;
  Vocabulary vocab_;
  DataOptions options_;
  int64_t excluded_ = 0;
};

}  // namespace avsr

#endif  // AVSR_HARNESS_DATA_H_
