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
// Synthetic audio-visual corpus. Each symbol lasts 0.2 s: in audio it is a
// Hann-windowed pair of tones, in video a mirror-symmetric constellation of
// four Gaussian blobs whose spacing identifies the symbol. Both streams share
// one timeline (5 video frames and 3200 samples per symbol).

#ifndef AVSR_DATAFLOW_SYNTH_H_
#define AVSR_DATAFLOW_SYNTH_H_

#include <array>
#include <cstdint>
#include <string>

#include "avsr/dataflow/manifest.h"
#include "avsr/dataflow/media.h"

namespace avsr {

struct SynthSpec {
  int alphabet_size = 5;
  int num_train = 100;
  int num_val = 20;
  int num_test = 20;
  int min_length = 1;
  int max_length = 8;
  int frame_size = 40;
  int sample_rate = 16000;
  double frame_rate = 25.0;
  double symbol_seconds = 0.2;
  double audio_noise = 0.01;   // white-noise standard deviation
  double pixel_noise = 0.03;
  uint64_t seed = 0;

  // ConfigError unless 2 <= alphabet_size <= 10, 1 <= min <= max <= 12 and
  // each symbol spans a whole number of frames and samples.
  void Validate() const;
  std::string alphabet() const;
  int64_t samples_per_symbol() const;
  int64_t frames_per_symbol() const;
};

// Tone frequencies (Hz) of a symbol index.
std::array<double, 2> SymbolTones(int symbol);
// Horizontal and vertical half-spacing (pixels) of a symbol's blobs.
std::array<int, 2> SymbolBlobOffsets(int symbol);

struct SynthUtterance {
  std::string transcript;
  AudioClip audio;
  VideoClip video;
};

// Renders one utterance deterministically from (spec.seed, id).
SynthUtterance RenderUtterance(const SynthSpec& spec, const std::string& id,
                               const std::string& transcript);
// Random transcript of spec.min_length..spec.max_length symbols.
std::string RandomTranscript(const SynthSpec& spec, const std::string& id);

// Babble: the sum of 6 independently rendered symbol streams, each circularly
// shifted by a random offset.
AudioClip BabbleNoise(const SynthSpec& spec, int64_t num_samples, uint64_t seed);

struct SynthCorpus {
  Manifest train, val, test;
  std::string train_path, val_path, test_path, babble_path;
};

// Writes wav/, frames/, {train,val,test}.tsv and babble.wav under dir.
// IoError when the directory cannot be created or written.
SynthCorpus WriteSynthCorpus(const SynthSpec& spec, const std::string& dir);

}  // namespace avsr

#endif  // AVSR_DATAFLOW_SYNTH_H_
