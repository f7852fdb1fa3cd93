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
// Waveform and frame-stack containers with their on-disk formats: mono
// 16-bit PCM WAV, and "AVF1" frame stacks (magic, little-endian u32 T, H, W,
// then T*H*W grayscale bytes).

#ifndef AVSR_DATAFLOW_MEDIA_H_
#define AVSR_DATAFLOW_MEDIA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avsr/numerics/tensor.h"

namespace avsr {

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
  Tensor ToTensor() const;
};

// Grayscale frames, row-major [T, H, W].
struct VideoClip {
  int64_t num_frames = 0;
  int64_t height = 0;
  int64_t width = 0;
  double frame_rate = 25.0;
  std::vector<double> pixels;

  VideoClip() = default;
  VideoClip(int64_t t, int64_t h, int64_t w)
      : num_frames(t), height(h), width(w),
        pixels(static_cast<size_t>(t * h * w), 0.0) {}
  double& at(int64_t t, int64_t y, int64_t x) {
    return pixels[static_cast<size_t>((t * height + y) * width + x)];
  }
  double at(int64_t t, int64_t y, int64_t x) const {
    return pixels[static_cast<size_t>((t * height + y) * width + x)];
  }
  Tensor ToTensor() const;
};

// Samples are clamped to [-1, 1] and scaled by 32767.
void WriteWav(const std::string& path, const AudioClip& clip);
// Accepts mono 16-bit PCM only; IoError otherwise.
AudioClip ReadWav(const std::string& path);

// Pixels are clamped to [0, 1] and stored as round(255 * v).
void WriteFrames(const std::string& path, const VideoClip& clip);
// Pixels are read back as byte / 255.
VideoClip ReadFrames(const std::string& path);
// Number of frames of an AVF1 file, from its header.
int64_t ReadFrameCount(const std::string& path);

}  // namespace avsr

#endif  // AVSR_DATAFLOW_MEDIA_H_
