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
#include "avsr/dataflow/synth.h"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "avsr/common/seed.h"

namespace avsr {
namespace {

namespace fs = std::filesystem;
using Rng = std::mt19937_64;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double Hann(double u) { return 0.5 - 0.5 * std::cos(kTwoPi * u); }

// Adds the tone signature of one symbol to out[start, start + len).
void AddSymbolAudio(std::vector<double>& out, int64_t start, int64_t len, int symbol,
                    double pitch, double amplitude, double phase, int sample_rate) {
  const auto tones = SymbolTones(symbol);
  for (int64_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double env = Hann((static_cast<double>(i) + 0.5) / static_cast<double>(len));
    const double s = 0.55 * std::sin(kTwoPi * tones[0] * pitch * t + phase) +
                     0.45 * std::sin(kTwoPi * tones[1] * pitch * t + 2.0 * phase);
    out[static_cast<size_t>((start + i) % static_cast<int64_t>(out.size()))] +=
        amplitude * env * s;
  }
}

}  // namespace

void SynthSpec::Validate() const {
  if (alphabet_size < 2 || alphabet_size > 10) {
    throw ConfigError(StrCat("alphabet size ", alphabet_size, " outside 2..10"));
  }
  if (min_length < 1 || max_length > 12 || min_length > max_length) {
    throw ConfigError(StrCat("utterance lengths ", min_length, "..", max_length,
                             " must satisfy 1 <= min <= max <= 12"));
  }
  if (num_train < 0 || num_val < 0 || num_test < 0) {
    throw ConfigError("utterance counts must be non-negative");
  }
  const double spf = symbol_seconds * frame_rate, sps = symbol_seconds * sample_rate;
  if (std::fabs(spf - std::round(spf)) > 1e-9 || std::fabs(sps - std::round(sps)) > 1e-9 ||
      spf < 1) {
    throw ConfigError("a symbol must span a whole number of frames and samples");
  }
  if (frame_size < 24) throw ConfigError("frame size must be at least 24 pixels");
}

std::string SynthSpec::alphabet() const {
  return std::string("abcdefghij").substr(0, static_cast<size_t>(alphabet_size));
}
int64_t SynthSpec::samples_per_symbol() const {
  return std::llround(symbol_seconds * sample_rate);
}
int64_t SynthSpec::frames_per_symbol() const { return std::llround(symbol_seconds * frame_rate); }

std::array<double, 2> SymbolTones(int symbol) {
  static constexpr std::array<std::array<double, 2>, 10> kTones = {{
      {320, 1900}, {470, 2650}, {640, 1450}, {820, 2300}, {1000, 3100},
      {390, 3400}, {560, 2050}, {730, 2900}, {910, 1700}, {1150, 2500},
  }};
  return kTones.at(static_cast<size_t>(symbol));
}

std::array<int, 2> SymbolBlobOffsets(int symbol) {
  static constexpr std::array<std::array<int, 2>, 10> kOffsets = {{
      {7, 2}, {2, 7}, {5, 5}, {8, 8}, {2, 2}, {8, 4}, {4, 8}, {5, 1}, {1, 5}, {8, 1},
  }};
  return kOffsets.at(static_cast<size_t>(symbol));
}

std::string RandomTranscript(const SynthSpec& spec, const std::string& id) {
  Rng rng(DeriveSeed(spec.seed, "transcript/" + id));
  const int len = std::uniform_int_distribution<int>(spec.min_length, spec.max_length)(rng);
  const std::string alpha = spec.alphabet();
  std::string t;
  for (int i = 0; i < len; ++i) {
    t += alpha[std::uniform_int_distribution<size_t>(0, alpha.size() - 1)(rng)];
  }
  return t;
}

SynthUtterance RenderUtterance(const SynthSpec& spec, const std::string& id,
                               const std::string& transcript) {
  spec.Validate();
  const std::string alpha = spec.alphabet();
  Rng rng(DeriveSeed(spec.seed, "render/" + id));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int64_t sps = spec.samples_per_symbol(), fps = spec.frames_per_symbol();
  const int64_t n = static_cast<int64_t>(transcript.size());
  SynthUtterance u;
  u.transcript = transcript;
  u.audio.sample_rate = spec.sample_rate;
  u.audio.samples.assign(static_cast<size_t>(n * sps), 0.0);
  u.video = VideoClip(n * fps, spec.frame_size, spec.frame_size);
  u.video.frame_rate = spec.frame_rate;

  // Per-utterance "speaker" variation.
  const double pitch = 0.97 + 0.06 * unit(rng);
  const int jitter_y = std::uniform_int_distribution<int>(-2, 2)(rng);
  const int jitter_x = std::uniform_int_distribution<int>(-2, 2)(rng);
  const double sigma = 1.6 + 0.4 * unit(rng);
  const double centre = (spec.frame_size - 1) / 2.0;

  for (int64_t s = 0; s < n; ++s) {
    const size_t pos = alpha.find(transcript[static_cast<size_t>(s)]);
    if (pos == std::string::npos) {
      throw ContractError(StrCat("symbol '", transcript[static_cast<size_t>(s)],
                                 "' is not in the synthetic alphabet \"", alpha, "\""));
    }
    const int sym = static_cast<int>(pos);
    const double amp = 0.15 + 0.1 * unit(rng);
    AddSymbolAudio(u.audio.samples, s * sps, sps, sym, pitch, amp, kTwoPi * unit(rng),
                   spec.sample_rate);
    const auto off = SymbolBlobOffsets(sym);
    for (int64_t f = 0; f < fps; ++f) {
      const double env = 0.35 + 0.65 * Hann((static_cast<double>(f) + 0.5) / fps);
      const int64_t t = s * fps + f;
      for (int dy : {-off[1], off[1]}) {
        for (int dx : {-off[0], off[0]}) {
          const double cy = centre + jitter_y + dy, cx = centre + jitter_x + dx;
          for (int64_t y = 0; y < spec.frame_size; ++y) {
            for (int64_t x = 0; x < spec.frame_size; ++x) {
              const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
              u.video.at(t, y, x) += 0.6 * env * std::exp(-d2 / (2 * sigma * sigma));
            }
          }
        }
      }
    }
  }
  std::normal_distribution<double> anoise(0.0, spec.audio_noise);
  for (double& v : u.audio.samples) v += anoise(rng);
  std::normal_distribution<double> pnoise(0.0, spec.pixel_noise);
  for (double& v : u.video.pixels) v = std::clamp(0.15 + v + pnoise(rng), 0.0, 1.0);
  return u;
}

AudioClip BabbleNoise(const SynthSpec& spec, int64_t num_samples, uint64_t seed) {
  spec.Validate();
  if (num_samples < 1) throw ContractError("babble length must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AudioClip out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(static_cast<size_t>(num_samples), 0.0);
  const int64_t sps = spec.samples_per_symbol();
  for (int talker = 0; talker < 6; ++talker) {
    const double pitch = 0.95 + 0.1 * unit(rng);
    const int64_t shift = std::uniform_int_distribution<int64_t>(0, num_samples - 1)(rng);
    for (int64_t start = 0; start < num_samples; start += sps) {
      const int sym = std::uniform_int_distribution<int>(0, spec.alphabet_size - 1)(rng);
      const int64_t len = std::min(sps, num_samples - start);
      AddSymbolAudio(out.samples, start + shift, len, sym, pitch, 0.1 + 0.1 * unit(rng),
                     kTwoPi * unit(rng), spec.sample_rate);
    }
  }
  return out;
}

SynthCorpus WriteSynthCorpus(const SynthSpec& spec, const std::string& dir) {
  spec.Validate();
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "wav", ec);
  if (!ec) fs::create_directories(fs::path(dir) / "frames", ec);
  if (ec) throw IoError(StrCat("cannot create corpus directory '", dir, "': ", ec.message()));
  SynthCorpus corpus;
  auto write_split = [&](const std::string& split, int count, Manifest& m, std::string& path) {
    m.split = split;
    for (int i = 0; i < count; ++i) {
      std::ostringstream name;
      name << split << '-' << std::setw(5) << std::setfill('0') << i;
      const std::string id = name.str();
      const SynthUtterance u = RenderUtterance(spec, id, RandomTranscript(spec, id));
      const std::string wav = "wav/" + id + ".wav", frames = "frames/" + id + ".avf";
      WriteWav((fs::path(dir) / wav).string(), u.audio);
      WriteFrames((fs::path(dir) / frames).string(), u.video);
      m.records.push_back({id, wav, frames, u.transcript});
    }
    path = (fs::path(dir) / (split + ".tsv")).string();
    WriteManifest(path, m);
    // Hand back resolved paths, as ReadManifest would.
    for (ManifestRecord& r : m.records) {
      r.wav_path = (fs::path(dir) / r.wav_path).string();
      r.frames_path = (fs::path(dir) / r.frames_path).string();
    }
  };
  write_split("train", spec.num_train, corpus.train, corpus.train_path);
  write_split("val", spec.num_val, corpus.val, corpus.val_path);
  write_split("test", spec.num_test, corpus.test, corpus.test_path);
  corpus.babble_path = (fs::path(dir) / "babble.wav").string();
  AudioClip babble = BabbleNoise(spec, 30 * spec.sample_rate, DeriveSeed(spec.seed, "babble"));
  // Keep the babble inside the PCM16 range.
  double peak = 0.0;
  for (double v : babble.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.9) for (double& v : babble.samples) v *= 0.9 / peak;
  WriteWav(corpus.babble_path, babble);
  return corpus;
}

}  // namespace avsr
