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

// ResNet-18 feature extractors over raw waveforms and grayscale frame stacks.

#ifndef AVSR_MODEL_FRONTENDS_H_
#define AVSR_MODEL_FRONTENDS_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "avsr/numerics/nn.h"

namespace avsr {

struct FrontendConfig {
  // Output channels of res2..res5; the stem uses channels[0].
  std::array<int64_t, 4> channels = {64, 128, 256, 512};
  int64_t audio_kernel = 80;
  int64_t audio_stride = 4;
  int64_t audio_pool = 10;
  int64_t sample_rate = 16000;
  int64_t frame_rate = 25;

  static FrontendConfig Full() { return {}; }
  static FrontendConfig Desk() {
    FrontendConfig c;
    c.channels = {8, 16, 32, 64};
    return c;
  }
  int64_t feature_dim() const { return channels[3]; }
  // conv1 stride x four stride-2 stages x pooling stride.
  int64_t audio_downsample() const { return audio_stride * 16 * audio_pool; }
  // Throws ConfigError unless the audio front-end emits frame_rate frames per
  // second.
  void Validate() const;
};

// Two 3-tap convolutions with batch norm, plus a 1-tap projection shortcut
// when the stride or channel count changes. spatial_rank 1 works on [C, L],
// spatial_rank 2 on [N, C, H, W].
struct ResidualBlock {
  int spatial_rank = 1;
  int64_t stride = 1;
  Parameter conv1;
  BatchNormLayer bn1;
  Parameter conv2;
  BatchNormLayer bn2;
  bool has_projection = false;
  Parameter proj;
  BatchNormLayer proj_bn;

  ResidualBlock() = default;
  ResidualBlock(int spatial_rank, int64_t in_channels, int64_t out_channels,
                int64_t stride, Rng& rng);
  Var Forward(ForwardContext& ctx, Var x);
  // Batch-norm statistics are pooled over the batch.
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& xs);
  void Register(ParamList& list, const std::string& prefix);
};

// conv1d stem, four residual stages, temporal average pooling.
class AudioFrontend {
 public:
  AudioFrontend() = default;
  AudioFrontend(const FrontendConfig& cfg, Rng& rng);

  int64_t MinSamples() const { return cfg_.audio_downsample(); }
  int64_t NumFrames(int64_t samples) const {
    return samples / cfg_.audio_downsample();
  }
  // samples: [N] normalized waveform -> [floor(N / downsample), feature_dim].
  Var Forward(ForwardContext& ctx, Var samples);
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& batch);
  void Register(ParamList& list, const std::string& prefix);

 private:
  FrontendConfig cfg_;
  Parameter stem_;
  BatchNormLayer stem_bn_;
  std::vector<ResidualBlock> blocks_;
};

// conv3d stem, per-frame max pooling, 2D residual stages, global spatial
// average pooling.
class VisualFrontend {
 public:
  VisualFrontend() = default;
  VisualFrontend(const FrontendConfig& cfg, Rng& rng);

  // Throws ShapeError naming the first stage whose input is too small.
  static void CheckFrameSize(int64_t height, int64_t width);
  // frames: [T, H, W] -> [T, feature_dim].
  Var Forward(ForwardContext& ctx, Var frames);
  std::vector<Var> ForwardBatch(ForwardContext& ctx, const std::vector<Var>& batch);
  void Register(ParamList& list, const std::string& prefix);

 private:
  FrontendConfig cfg_;
  Parameter stem_;
  BatchNormLayer stem_bn_;
  std::vector<ResidualBlock> blocks_;
};

}  // namespace avsr

#endif  // AVSR_MODEL_FRONTENDS_H_
