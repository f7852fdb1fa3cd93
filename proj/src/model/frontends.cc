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

#include "avsr/model/frontends.h"

namespace avsr {
namespace {

constexpr int64_t kMinFrameExtent = 16;

Shape KernelShape(int spatial_rank, int64_t out, int64_t in, int64_t k) {
  Shape s = {out, in};
  for (int i = 0; i < spatial_rank; ++i) s.push_back(k);
  return s;
}

Tensor ConvInit(const Shape& shape, Rng& rng) {
  int64_t fan_in = 1;
  for (size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  return HeNormal(shape, fan_in, rng);
}

Var Conv(int spatial_rank, Var x, Var w, int64_t stride, int64_t pad) {
  return spatial_rank == 1 ? ops::Conv1d(x, w, Var(), stride, pad)
                           : ops::Conv2d(x, w, Var(), stride, pad);
}

std::vector<ResidualBlock> MakeStages(int spatial_rank,
                                      const std::array<int64_t, 4>& channels,
                                      const std::array<int64_t, 4>& strides,
                                      Rng& rng) {
  std::vector<ResidualBlock> blocks;
  int64_t in = channels[0];
  for (int s = 0; s < 4; ++s) {
    blocks.emplace_back(spatial_rank, in, channels[s], strides[s], rng);
    blocks.emplace_back(spatial_rank, channels[s], channels[s], 1, rng);
    in = channels[s];
  }
  return blocks;
}

void RegisterStages(std::vector<ResidualBlock>& blocks, ParamList& list,
                    const std::string& prefix) {
  for (size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].Register(list, Join(prefix, StrCat("res", 2 + i / 2, ".", i % 2)));
  }
}

}  // namespace

void FrontendConfig::Validate() const {
  for (int64_t c : channels) {
    if (c < 1) throw ConfigError("front-end channel counts must be positive");
  }
  if (audio_downsample() * frame_rate != sample_rate) {
    throw ConfigError(StrCat("audio front-end downsamples by ", audio_downsample(),
                             ", which does not give ", frame_rate,
                             " frames per second at ", sample_rate, " Hz"));
  }
}

ResidualBlock::ResidualBlock(int rank, int64_t in_channels, int64_t out_channels,
                             int64_t block_stride, Rng& rng)
    : spatial_rank(rank),
      stride(block_stride),
      bn1(out_channels),
      bn2(out_channels),
      has_projection(block_stride > 1 || in_channels != out_channels) {
  if (rank != 1 && rank != 2) throw ConfigError("residual blocks are 1D or 2D");
  conv1.value = ConvInit(KernelShape(rank, out_channels, in_channels, 3), rng);
  conv2.value = ConvInit(KernelShape(rank, out_channels, out_channels, 3), rng);
  bn2.gamma.value.Fill(0.0);
  if (has_projection) {
    proj.value = ConvInit(KernelShape(rank, out_channels, in_channels, 1), rng);
    proj_bn = BatchNormLayer(out_channels);
  }
}

Var ResidualBlock::Forward(ForwardContext& ctx, Var x) {
  return ForwardBatch(ctx, {x})[0];
}

std::vector<Var> ResidualBlock::ForwardBatch(ForwardContext& ctx,
                                             const std::vector<Var>& xs) {
  const int channel_axis = spatial_rank == 1 ? 0 : 1;
  const int batch_axis = spatial_rank == 1 ? 1 : 0;
  Tape& tape = ctx.tape;
  std::vector<Var> h, shortcut = xs;
  for (const Var& x : xs) h.push_back(Conv(spatial_rank, x, tape.Param(conv1), stride, 1));
  h = bn1.ForwardBatch(ctx, h, channel_axis, batch_axis);
  for (Var& v : h) v = Conv(spatial_rank, ops::Relu(v), tape.Param(conv2), 1, 1);
  h = bn2.ForwardBatch(ctx, h, channel_axis, batch_axis);
  if (has_projection) {
    for (Var& v : shortcut) v = Conv(spatial_rank, v, tape.Param(proj), stride, 0);
    shortcut = proj_bn.ForwardBatch(ctx, shortcut, channel_axis, batch_axis);
  }
  for (size_t i = 0; i < h.size(); ++i) h[i] = ops::Relu(ops::Add(shortcut[i], h[i]));
  return h;
}

void ResidualBlock::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "conv1"), conv1);
  bn1.Register(list, Join(prefix, "bn1"));
  list.Add(Join(prefix, "conv2"), conv2);
  bn2.Register(list, Join(prefix, "bn2"));
  if (has_projection) {
    list.Add(Join(prefix, "proj"), proj);
    proj_bn.Register(list, Join(prefix, "proj_bn"));
  }
}

// ---------------------------------------------------------------------------

AudioFrontend::AudioFrontend(const FrontendConfig& cfg, Rng& rng)
    : cfg_(cfg), stem_bn_(cfg.channels[0]) {
  cfg_.Validate();
  stem_.value = ConvInit({cfg.channels[0], 1, cfg.audio_kernel}, rng);
  blocks_ = MakeStages(1, cfg.channels, {2, 2, 2, 2}, rng);
}

Var AudioFrontend::Forward(ForwardContext& ctx, Var samples) {
  return ForwardBatch(ctx, {samples})[0];
}

std::vector<Var> AudioFrontend::ForwardBatch(ForwardContext& ctx,
                                             const std::vector<Var>& batch) {
  // Padding (K - S) / 2 keeps the stem output at exactly used / S samples.
  const int64_t pad = (cfg_.audio_kernel - cfg_.audio_stride) / 2;
  std::vector<Var> h;
  for (const Var& samples : batch) {
    if (samples.rank() != 1) {
      throw ShapeError(StrCat("audio front-end expects [samples], got ",
                              ShapeString(samples.shape())));
    }
    const int64_t n = samples.dim(0);
    const int64_t frames = NumFrames(n);
    if (frames < 1) {
      throw ShapeError(StrCat("insufficient samples: ", n, " given, at least ",
                              MinSamples(), " required for one frame"));
    }
    const int64_t used = frames * cfg_.audio_downsample();
    Var x = used == n ? samples : ops::Slice(samples, 0, 0, used);
    x = ops::Reshape(x, {1, used});
    h.push_back(ops::Conv1d(x, ctx.tape.Param(stem_), Var(), cfg_.audio_stride, pad));
  }
  h = stem_bn_.ForwardBatch(ctx, h, 0, 1);
  for (Var& v : h) v = ops::Relu(v);
  for (ResidualBlock& b : blocks_) h = b.ForwardBatch(ctx, h);
  for (Var& v : h) {
    v = ops::Transpose(ops::AvgPool1d(v, cfg_.audio_pool, cfg_.audio_pool), 0, 1);
  }
  return h;
}

void AudioFrontend::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "stem"), stem_);
  stem_bn_.Register(list, Join(prefix, "stem_bn"));
  RegisterStages(blocks_, list, prefix);
}

// ---------------------------------------------------------------------------

VisualFrontend::VisualFrontend(const FrontendConfig& cfg, Rng& rng)
    : cfg_(cfg), stem_bn_(cfg.channels[0]) {
  stem_.value = ConvInit({cfg.channels[0], 1, 5, 7, 7}, rng);
  blocks_ = MakeStages(2, cfg.channels, {1, 2, 2, 2}, rng);
}

void VisualFrontend::CheckFrameSize(int64_t height, int64_t width) {
  struct Stage {
    const char* name;
    int64_t kernel, stride, pad;
  };
  static const Stage kStages[] = {{"conv3d stem", 7, 2, 3}, {"maxpool", 3, 2, 1},
                                  {"res2", 3, 1, 1},        {"res3", 3, 2, 1},
                                  {"res4", 3, 2, 1},        {"res5", 3, 2, 1}};
  // Extents that a minimum-size frame presents to each stage.
  int64_t need = kMinFrameExtent, h = height, w = width;
  for (const Stage& s : kStages) {
    if (h < need || w < need) {
      throw ShapeError(StrCat("frame ", height, "x", width, " too small for the ",
                              s.name, " stage: input ", h, "x", w, ", need ",
                              need, "x", need, " (frames of at least ",
                              kMinFrameExtent, "x", kMinFrameExtent, ")"));
    }
    need = ops::ConvOutputLength(need, s.kernel, s.stride, s.pad);
    h = ops::ConvOutputLength(h, s.kernel, s.stride, s.pad);
    w = ops::ConvOutputLength(w, s.kernel, s.stride, s.pad);
  }
}

Var VisualFrontend::Forward(ForwardContext& ctx, Var frames) {
  return ForwardBatch(ctx, {frames})[0];
}

std::vector<Var> VisualFrontend::ForwardBatch(ForwardContext& ctx,
                                              const std::vector<Var>& batch) {
  std::vector<Var> h;
  for (const Var& frames : batch) {
    if (frames.rank() != 3) {
      throw ShapeError(StrCat("visual front-end expects [T, H, W], got ",
                              ShapeString(frames.shape())));
    }
    const int64_t T = frames.dim(0), H = frames.dim(1), W = frames.dim(2);
    CheckFrameSize(H, W);
    Var x = ops::Reshape(frames, {1, T, H, W});
    h.push_back(ops::Conv3d(x, ctx.tape.Param(stem_), Var(), {1, 2, 2}, {2, 3, 3}));
  }
  h = stem_bn_.ForwardBatch(ctx, h, 0, 1);
  // Past the stem every frame is processed on its own, so the clips can
  // share one [sum T, C, H, W] tensor.
  for (Var& v : h) v = ops::Permute(ops::Relu(v), {1, 0, 2, 3});
  const std::vector<int64_t> lengths = BatchLengths(h, 0);
  Var x = ops::MaxPool2d(ConcatBatch(h, 0), 3, 2, 1);
  for (ResidualBlock& b : blocks_) x = b.Forward(ctx, x);
  return SplitBatch(ops::MeanAxes(x, {2, 3}), 0, lengths);
}

void VisualFrontend::Register(ParamList& list, const std::string& prefix) {
  list.Add(Join(prefix, "stem"), stem_);
  stem_bn_.Register(list, Join(prefix, "stem_bn"));
  RegisterStages(blocks_, list, prefix);
}

}  // namespace avsr
