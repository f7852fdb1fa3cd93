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
#include "avsr/dataflow/augment.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace avsr {
namespace {

using Rng = std::mt19937_64;

// Uniform on (0, hi].
double UniformOpenClosed(Rng& rng, double hi) {
  return hi * (1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

}  // namespace

void AugmentPolicy::Validate() const {
  for (double s : snr_levels_db) {
    if (!(s >= -5.0 && s <= 20.0)) {
      throw ConfigError(StrCat("SNR level ", s, " dB outside [-5, 20]"));
    }
  }
  if (use_noise && snr_levels_db.empty() && !include_clean) {
    throw ConfigError("noise mixing needs at least one SNR level or the clean branch");
  }
  if (n_time_masks < 0 || n_band_rejects < 0) {
    throw ConfigError("mask and band counts must be non-negative");
  }
  if (!(max_mask_seconds > 0.0) || !(max_band_hz > 0.0)) {
    throw ConfigError("mask length and band width bounds must be positive");
  }
  if (!(speed_min >= 0.9 && speed_max <= 1.1 && speed_min <= speed_max)) {
    throw ConfigError(StrCat("speed range [", speed_min, ", ", speed_max,
                             "] must lie within [0.9, 1.1]"));
  }
  if (crop < 1) throw ConfigError("crop size must be positive");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) {
    throw ConfigError("flip probability must be in [0, 1]");
  }
}

AugmentPolicy AugmentPolicy::FromConfig(KeyValueConfig& cfg) {
  AugmentPolicy p;
  p.snr_levels_db = cfg.GetDoubleList("snr_levels_db", p.snr_levels_db);
  p.include_clean = cfg.GetBool("include_clean", p.include_clean);
  p.n_time_masks = static_cast<int>(cfg.GetInt("n_time_masks", p.n_time_masks));
  p.max_mask_seconds = cfg.GetDouble("max_mask_seconds", p.max_mask_seconds);
  p.n_band_rejects = static_cast<int>(cfg.GetInt("n_band_rejects", p.n_band_rejects));
  p.max_band_hz = cfg.GetDouble("max_band_hz", p.max_band_hz);
  p.speed_min = cfg.GetDouble("speed_min", p.speed_min);
  p.speed_max = cfg.GetDouble("speed_max", p.speed_max);
  p.crop = cfg.GetInt("crop", p.crop);
  p.hflip_prob = cfg.GetDouble("hflip_prob", p.hflip_prob);
  p.use_noise = cfg.GetBool("use_noise", p.use_noise);
  p.use_time_mask = cfg.GetBool("use_time_mask", p.use_time_mask);
  p.use_band_reject = cfg.GetBool("use_band_reject", p.use_band_reject);
  p.use_speed = cfg.GetBool("use_speed", p.use_speed);
  p.Validate();
  return p;
}

double MeanSquare(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

double SnrDb(const std::vector<double>& signal, const std::vector<double>& noise) {
  return 10.0 * std::log10(MeanSquare(signal) / MeanSquare(noise));
}

AudioClip NormalizeWaveform(const AudioClip& clip) {
  const double n = static_cast<double>(clip.samples.size());
  if (clip.samples.empty()) throw DegenerateInputError("cannot normalize an empty waveform");
  double mean = 0.0;
  for (double v : clip.samples) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : clip.samples) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw DegenerateInputError("cannot normalize a constant waveform");
  const double inv = 1.0 / std::sqrt(var);
  AudioClip out = clip;
  for (double& v : out.samples) v = (v - mean) * inv;
  return out;
}

AudioClip MixAtSnr(const AudioClip& clean, const AudioClip& noise, double snr_db,
                   int64_t noise_offset) {
  if (std::isinf(snr_db) && snr_db > 0) return clean;
  if (noise.samples.empty()) throw DegenerateInputError("noise clip is empty");
  if (clean.sample_rate != noise.sample_rate) {
    throw ContractError(StrCat("sample rates differ: ", clean.sample_rate, " vs ",
                               noise.sample_rate));
  }
  std::vector<double> n(clean.samples.size());
  const int64_t len = noise.size();
  for (size_t i = 0; i < n.size(); ++i) {
    n[i] = noise.samples[static_cast<size_t>((noise_offset + static_cast<int64_t>(i)) % len)];
  }
  const double pn = MeanSquare(n), pc = MeanSquare(clean.samples);
  if (!(pn > 0.0)) throw DegenerateInputError("noise is silent over the clip");
  if (!(pc > 0.0)) throw DegenerateInputError("clean audio is silent; SNR undefined");
  const double gain = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  AudioClip out = clean;
  for (size_t i = 0; i < n.size(); ++i) out.samples[i] += gain * n[i];
  return out;
}

AudioClip TimeMask(const AudioClip& clip, const AugmentPolicy& policy, uint64_t seed,
                   TimeMaskInfo* info) {
  TimeMaskInfo local;
  TimeMaskInfo& inf = info ? *info : local;
  inf = {};
  const int64_t max_len =
      std::max<int64_t>(1, std::llround(policy.max_mask_seconds * clip.sample_rate));
  AudioClip out = clip;
  if (clip.size() < max_len) {
    inf.skipped = true;
    return out;
  }
  Rng rng(seed);
  for (int m = 0; m < policy.n_time_masks; ++m) {
    const int64_t len = std::uniform_int_distribution<int64_t>(1, max_len)(rng);
    const int64_t start = std::uniform_int_distribution<int64_t>(0, clip.size() - len)(rng);
    std::fill(out.samples.begin() + start, out.samples.begin() + start + len, 0.0);
    inf.spans.push_back({start, start + len});
  }
  return out;
}

AudioClip RejectBands(const AudioClip& clip, const std::vector<Band>& bands) {
  const int n = static_cast<int>(clip.size());
  AudioClip out = clip;
  if (n == 0) return out;
  std::vector<double> buf(clip.samples);
  const int bins = n / 2 + 1;
  fftw_complex* spec = fftw_alloc_complex(static_cast<size_t>(bins));
  fftw_plan fwd = fftw_plan_dft_r2c_1d(n, buf.data(), spec, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r_1d(n, spec, out.samples.data(), FFTW_ESTIMATE);
  fftw_execute(fwd);
  const double hz_per_bin = static_cast<double>(clip.sample_rate) / n;
  bool any = false;
  for (const Band& b : bands) {
    if (!(b.high_hz > b.low_hz)) continue;
    for (int k = 0; k < bins; ++k) {
      const double f = k * hz_per_bin;
      if (f >= b.low_hz && f <= b.high_hz) {
        spec[k][0] = spec[k][1] = 0.0;
        any = true;
      }
    }
  }
  if (any) {
    fftw_execute(inv);
    for (double& v : out.samples) v /= n;
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(spec);
  return out;
}

AudioClip BandReject(const AudioClip& clip, const AugmentPolicy& policy, uint64_t seed,
                     std::vector<Band>* bands) {
  Rng rng(seed);
  const double nyquist = clip.sample_rate / 2.0;
  std::vector<Band> chosen;
  for (int i = 0; i < policy.n_band_rejects; ++i) {
    const double width = std::min(UniformOpenClosed(rng, policy.max_band_hz), nyquist);
    const double centre =
        std::uniform_real_distribution<double>(width / 2, nyquist - width / 2)(rng);
    chosen.push_back({centre - width / 2, centre + width / 2});
  }
  if (bands) *bands = chosen;
  return RejectBands(clip, chosen);
}

AudioClip SpeedPerturb(const AudioClip& clip, double factor) {
  if (!(factor >= 0.9 && factor <= 1.1)) {
    throw ConfigError(StrCat("speed factor ", factor, " outside [0.9, 1.1]"));
  }
  if (factor == 1.0) return clip;
  const int64_t n = clip.size();
  const int64_t m = std::llround(static_cast<double>(n) / factor);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(static_cast<size_t>(m));
  for (int64_t i = 0; i < m; ++i) {
    const double pos = static_cast<double>(i) * factor;
    const int64_t j = static_cast<int64_t>(pos);
    const double frac = pos - static_cast<double>(j);
    const double a = clip.samples[static_cast<size_t>(std::min(j, n - 1))];
    const double b = clip.samples[static_cast<size_t>(std::min(j + 1, n - 1))];
    out.samples[static_cast<size_t>(i)] = a + frac * (b - a);
  }
  return out;
}

AudioClip AugmentAudio(const AudioClip& clip, const AudioClip& noise,
                       const AugmentPolicy& policy, uint64_t seed, AudioAugmentInfo* info) {
  AudioAugmentInfo local;
  AudioAugmentInfo& inf = info ? *info : local;
  inf = {};
  inf.snr_db = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  AudioClip out = clip;
  if (policy.use_noise) {
    const size_t choices = policy.snr_levels_db.size() + (policy.include_clean ? 1 : 0);
    const size_t pick = std::uniform_int_distribution<size_t>(0, choices - 1)(rng);
    const int64_t offset =
        std::uniform_int_distribution<int64_t>(0, std::max<int64_t>(0, noise.size() - 1))(rng);
    if (pick < policy.snr_levels_db.size()) {
      inf.snr_db = policy.snr_levels_db[pick];
      out = MixAtSnr(out, noise, inf.snr_db, offset);
    }
  }
  const uint64_t mask_seed = rng(), band_seed = rng();
  const double speed =
      std::uniform_real_distribution<double>(policy.speed_min, policy.speed_max)(rng);
  if (policy.use_time_mask) out = TimeMask(out, policy, mask_seed, &inf.masks);
  if (policy.use_band_reject) out = BandReject(out, policy, band_seed, &inf.bands);
  if (policy.use_speed) {
    inf.speed = speed;
    out = SpeedPerturb(out, speed);
  }
  return out;
}

VideoClip Crop(const VideoClip& clip, int64_t y, int64_t x, int64_t size) {
  if (y < 0 || x < 0 || y + size > clip.height || x + size > clip.width) {
    throw ShapeError(StrCat("crop ", size, "x", size, " at (", y, ", ", x,
                            ") does not fit frames of ", clip.height, "x", clip.width));
  }
  VideoClip out(clip.num_frames, size, size);
  out.frame_rate = clip.frame_rate;
  for (int64_t t = 0; t < clip.num_frames; ++t)
    for (int64_t r = 0; r < size; ++r)
      for (int64_t c = 0; c < size; ++c) out.at(t, r, c) = clip.at(t, y + r, x + c);
  return out;
}

VideoClip FlipHorizontal(const VideoClip& clip) {
  VideoClip out = clip;
  for (int64_t t = 0; t < clip.num_frames; ++t)
    for (int64_t r = 0; r < clip.height; ++r)
      for (int64_t c = 0; c < clip.width; ++c)
        out.at(t, r, c) = clip.at(t, r, clip.width - 1 - c);
  return out;
}

VideoClip AugmentVideo(const VideoClip& clip, const AugmentPolicy& policy, uint64_t seed,
                       bool training, VideoAugmentInfo* info) {
  const int64_t k = policy.crop;
  if (clip.height < k || clip.width < k) {
    throw ShapeError(StrCat("frames of ", clip.height, "x", clip.width,
                            " are smaller than the ", k, "x", k, " crop"));
  }
  VideoAugmentInfo inf;
  if (training) {
    Rng rng(seed);
    inf.offset_y = std::uniform_int_distribution<int64_t>(0, clip.height - k)(rng);
    inf.offset_x = std::uniform_int_distribution<int64_t>(0, clip.width - k)(rng);
    inf.flipped = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < policy.hflip_prob;
  } else {
    inf.offset_y = (clip.height - k) / 2;
    inf.offset_x = (clip.width - k) / 2;
  }
  if (info) *info = inf;
  VideoClip out = Crop(clip, inf.offset_y, inf.offset_x, k);
  return inf.flipped ? FlipHorizontal(out) : out;
}

void FrameStatsAccumulator::Add(const VideoClip& clip) {
  for (double v : clip.pixels) {
    sum_ += v;
    sum_sq_ += v * v;
  }
  count_ += static_cast<double>(clip.pixels.size());
}

FrameStats FrameStatsAccumulator::Finish() const {
  if (count_ == 0.0) throw DegenerateInputError("frame statistics over no pixels");
  FrameStats s;
  s.mean = sum_ / count_;
  const double var = sum_sq_ / count_ - s.mean * s.mean;
  if (!(var > 0.0)) throw DegenerateInputError("constant frames have no spread");
  s.stddev = std::sqrt(var);
  return s;
}

VideoClip NormalizeFrames(const VideoClip& clip, const FrameStats& stats) {
  VideoClip out = clip;
  for (double& v : out.pixels) v = (v - stats.mean) / stats.stddev;
  return out;
}

}  // namespace avsr
