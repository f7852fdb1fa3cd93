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
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "avsr/dataflow/augment.h"
#include "avsr/dataflow/manifest.h"
#include "avsr/dataflow/media.h"
#include "avsr/dataflow/synth.h"
#include "avsr/model/fusion_decoder.h"

using namespace avsr;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

AudioClip Tone(double hz, int64_t n, int rate = 16000, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  c.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) c.samples[i] = amp * std::sin(2 * kPi * hz * i / rate);
  return c;
}

AudioClip Noise(int64_t n, uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  AudioClip c;
  c.samples.resize(static_cast<size_t>(n));
  for (double& v : c.samples) v = d(rng);
  return c;
}

double Mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / x.size();
}

int ZeroCrossings(const std::vector<double>& x) {
  int z = 0;
  for (size_t i = 1; i < x.size(); ++i) z += (x[i - 1] < 0) != (x[i] < 0);
  return z;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("avsr_dataflow_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name() + "_" +
             std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Normalization

TEST(NormalizeTest, TwoPointCase) {
  AudioClip c;
  c.samples = {1.0, 3.0};
  AudioClip n = NormalizeWaveform(c);
  EXPECT_NEAR(n.samples[0], -1.0, 1e-12);
  EXPECT_NEAR(n.samples[1], 1.0, 1e-12);
}

TEST(NormalizeTest, StatisticsAndIdempotence) {
  AudioClip c = Noise(12345, 1, 0.3);
  for (double& v : c.samples) v += 0.7;
  AudioClip n = NormalizeWaveform(c);
  double mean = Mean(n.samples), var = 0;
  for (double v : n.samples) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(std::sqrt(var / n.samples.size()), 1.0, 1e-6);
  AudioClip again = NormalizeWaveform(n);
  for (size_t i = 0; i < n.samples.size(); ++i) EXPECT_NEAR(again.samples[i], n.samples[i], 1e-6);
}

TEST(NormalizeTest, ConstantIsDegenerate) {
  AudioClip c;
  c.samples.assign(100, 0.25);
  EXPECT_THROW(NormalizeWaveform(c), DegenerateInputError);
}

// ---------------------------------------------------------------------------
// SNR mixing

TEST(MixTest, ZeroDbEqualizesPower) {
  AudioClip clean = Tone(440, 16000), noise = Noise(16000, 2);
  AudioClip mixed = MixAtSnr(clean, noise, 0.0);
  std::vector<double> added(mixed.samples.size());
  for (size_t i = 0; i < added.size(); ++i) added[i] = mixed.samples[i] - clean.samples[i];
  EXPECT_NEAR(MeanSquare(added), MeanSquare(clean.samples), 1e-12);
}

TEST(MixTest, MeasuredSnrAcrossLevels) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    for (double snr : {-5.0, 0.0, 5.0, 10.0, 15.0, 20.0}) {
      AudioClip clean = Noise(4000 + trial * 7, rng(), 0.2);
      AudioClip noise = Noise(3000, rng(), 1.5);  // shorter: looped
      AudioClip mixed = MixAtSnr(clean, noise, snr, static_cast<int64_t>(rng() % 3000));
      std::vector<double> added(mixed.samples.size());
      for (size_t i = 0; i < added.size(); ++i) added[i] = mixed.samples[i] - clean.samples[i];
      const double measured =
          10 * std::log10(MeanSquare(clean.samples) / MeanSquare(added));
      ASSERT_NEAR(measured, snr, 0.1);
    }
  }
}

TEST(MixTest, CleanBranchAndErrors) {
  AudioClip clean = Tone(300, 800), noise = Noise(800, 4);
  AudioClip out = MixAtSnr(clean, noise, std::numeric_limits<double>::infinity());
  EXPECT_EQ(out.samples, clean.samples);
  AudioClip silent;
  silent.samples.assign(800, 0.0);
  EXPECT_THROW(MixAtSnr(clean, silent, 5.0), DegenerateInputError);
}

// ---------------------------------------------------------------------------
// Time masking

TEST(TimeMaskTest, BoundsDeterminismAndUntouchedSamples) {
  AugmentPolicy p;
  AudioClip c = Noise(40000, 5);
  for (double& v : c.samples) v += 3.0;  // no natural zeros
  for (uint64_t seed = 0; seed < 50; ++seed) {
    TimeMaskInfo info;
    AudioClip m = TimeMask(c, p, seed, &info);
    ASSERT_EQ(info.spans.size(), 2u);
    std::vector<bool> masked(c.samples.size(), false);
    for (auto [a, b] : info.spans) {
      EXPECT_GE(b - a, 1);
      EXPECT_LE(b - a, 6400);
      for (int64_t i = a; i < b; ++i) masked[i] = true;
    }
    int64_t zeros = 0;
    for (size_t i = 0; i < c.samples.size(); ++i) {
      if (masked[i]) {
        EXPECT_EQ(m.samples[i], 0.0);
      } else {
        EXPECT_EQ(m.samples[i], c.samples[i]);
      }
      zeros += m.samples[i] == 0.0;
    }
    EXPECT_LE(zeros, 12800);
    EXPECT_EQ(TimeMask(c, p, seed).samples, m.samples);
  }
  TimeMaskInfo info;
  AudioClip shortclip = Noise(3000, 6);
  EXPECT_EQ(TimeMask(shortclip, p, 1, &info).samples, shortclip.samples);
  EXPECT_TRUE(info.skipped);
}

// ---------------------------------------------------------------------------
// Band rejection

TEST(BandRejectTest, ProbeTones) {
  const double gain_in =
      MeanSquare(RejectBands(Tone(1075, 16000), {{1000, 1150}}).samples) /
      MeanSquare(Tone(1075, 16000).samples);
  EXPECT_LE(10 * std::log10(gain_in), -20.0);
  const double gain_out =
      MeanSquare(RejectBands(Tone(500, 16000), {{1000, 1150}}).samples) /
      MeanSquare(Tone(500, 16000).samples);
  EXPECT_GT(10 * std::log10(gain_out), -1.0);
  AudioClip c = Noise(5000, 7);
  AudioClip same = RejectBands(c, {{1200, 1200}});
  EXPECT_EQ(same.samples, c.samples);
}

TEST(BandRejectTest, RandomBandsAttenuateProbes) {
  AugmentPolicy p;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    std::vector<Band> bands;
    BandReject(Tone(100, 1000), p, seed, &bands);
    ASSERT_EQ(bands.size(), 2u);
    for (const Band& b : bands) {
      EXPECT_GT(b.high_hz - b.low_hz, 0.0);
      EXPECT_LE(b.high_hz - b.low_hz, 150.0 + 1e-9);
      EXPECT_GE(b.low_hz, 0.0);
      EXPECT_LE(b.high_hz, 8000.0);
      const double w = b.high_hz - b.low_hz;
      if (w < 40) continue;  // probes need a band many bins wide
      const double centre = (b.low_hz + b.high_hz) / 2;
      AudioClip probe = Tone(centre, 16000);
      const double in_db =
          10 * std::log10(MeanSquare(RejectBands(probe, {b}).samples) / MeanSquare(probe.samples));
      EXPECT_LE(in_db, -20.0) << b.low_hz << "-" << b.high_hz;
      const double far = centre + 2 * w < 7900 ? centre + 2 * w : centre - 2 * w;
      AudioClip probe2 = Tone(far, 16000);
      const double out_db = 10 * std::log10(MeanSquare(RejectBands(probe2, {b}).samples) /
                                            MeanSquare(probe2.samples));
      EXPECT_GT(out_db, -1.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Speed perturbation

TEST(SpeedTest, LengthIdentityAndPitch) {
  AudioClip c = Tone(200, 16000);
  EXPECT_EQ(SpeedPerturb(c, 1.0).samples, c.samples);
  EXPECT_EQ(SpeedPerturb(c, 0.9).size(), 17778);
  EXPECT_EQ(SpeedPerturb(c, 1.1).size(), 14545);
  for (double f : {0.9, 0.95, 1.05, 1.1}) {
    AudioClip s = SpeedPerturb(c, f);
    // Crossings per second scale with the factor.
    const double rate_in = ZeroCrossings(c.samples) / c.seconds();
    const double rate_out = ZeroCrossings(s.samples) / s.seconds();
    EXPECT_NEAR(rate_out / rate_in, f, 0.01);
  }
  EXPECT_THROW(SpeedPerturb(c, 1.2), ConfigError);
  EXPECT_THROW(SpeedPerturb(c, 0.85), ConfigError);
}

// ---------------------------------------------------------------------------
// Full audio pipeline

TEST(AugmentAudioTest, CleanBranchIsExactAndSeedsReplay) {
  AugmentPolicy p;
  p.use_time_mask = p.use_band_reject = p.use_speed = false;
  AudioClip c = Tone(440, 8000), noise = Noise(20000, 9);
  int clean = 0;
  for (uint64_t seed = 0; seed < 70; ++seed) {
    AudioAugmentInfo info;
    AudioClip out = AugmentAudio(c, noise, p, seed, &info);
    if (std::isinf(info.snr_db)) {
      ++clean;
      EXPECT_EQ(out.samples, c.samples);
    } else {
      std::vector<double> added(out.samples.size());
      for (size_t i = 0; i < added.size(); ++i) added[i] = out.samples[i] - c.samples[i];
      EXPECT_NEAR(SnrDb(c.samples, added), info.snr_db, 1e-9);
    }
    EXPECT_EQ(AugmentAudio(c, noise, p, seed).samples, out.samples);
  }
  EXPECT_GT(clean, 0);
  EXPECT_LT(clean, 30);
  AugmentPolicy all;
  AudioAugmentInfo info;
  AudioClip out = AugmentAudio(Tone(440, 16000), noise, all, 3, &info);
  EXPECT_EQ(out.size(), std::llround(16000 / info.speed));
  EXPECT_EQ(out.sample_rate, 16000);
}

// ---------------------------------------------------------------------------
// Video augmentation

TEST(AugmentVideoTest, CropFlipAndDeterminism) {
  VideoClip v(3, 96, 96);
  std::mt19937_64 rng(1);
  for (double& p : v.pixels) p = std::uniform_real_distribution<double>(0, 1)(rng);
  AugmentPolicy policy;
  bool saw_flip = false, saw_plain = false;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    VideoAugmentInfo info;
    VideoClip out = AugmentVideo(v, policy, seed, true, &info);
    ASSERT_EQ(out.height, 88);
    ASSERT_EQ(out.width, 88);
    EXPECT_GE(info.offset_y, 0);
    EXPECT_LE(info.offset_y, 8);
    EXPECT_GE(info.offset_x, 0);
    EXPECT_LE(info.offset_x, 8);
    (info.flipped ? saw_flip : saw_plain) = true;
    for (int64_t t = 0; t < 3; ++t)
      for (int64_t y = 0; y < 88; y += 7)
        for (int64_t x = 0; x < 88; x += 5) {
          const int64_t sx = info.flipped ? 87 - x : x;
          ASSERT_EQ(out.at(t, y, x), v.at(t, info.offset_y + y, info.offset_x + sx));
        }
    EXPECT_EQ(AugmentVideo(v, policy, seed, true).pixels, out.pixels);
  }
  EXPECT_TRUE(saw_flip && saw_plain);
  EXPECT_EQ(FlipHorizontal(FlipHorizontal(v)).pixels, v.pixels);
  VideoAugmentInfo info;
  AugmentVideo(v, policy, 5, false, &info);
  EXPECT_EQ(info.offset_y, 4);
  EXPECT_EQ(info.offset_x, 4);
  EXPECT_FALSE(info.flipped);
  EXPECT_THROW(AugmentVideo(VideoClip(2, 80, 96), policy, 0, true), ShapeError);
}

TEST(FrameStatsTest, MatchesDirectRecomputation) {
  std::vector<VideoClip> clips;
  std::mt19937_64 rng(2);
  FrameStatsAccumulator acc;
  double sum = 0, n = 0;
  for (int i = 0; i < 4; ++i) {
    VideoClip v(2 + i, 5, 6);
    for (double& p : v.pixels) {
      p = std::uniform_real_distribution<double>(0, 1)(rng);
      sum += p;
      n += 1;
    }
    acc.Add(v);
    clips.push_back(v);
  }
  const double mean = sum / n;
  double ss = 0;
  for (const auto& v : clips)
    for (double p : v.pixels) ss += (p - mean) * (p - mean);
  FrameStats s = acc.Finish();
  EXPECT_NEAR(s.mean, mean, 1e-12);
  EXPECT_NEAR(s.stddev, std::sqrt(ss / n), 1e-12);
  VideoClip norm = NormalizeFrames(clips[0], s);
  EXPECT_NEAR(norm.pixels[3], (clips[0].pixels[3] - mean) / std::sqrt(ss / n), 1e-12);
}

// ---------------------------------------------------------------------------
// File formats

TEST(MediaTest, WavRoundTrip) {
  TempDir dir;
  AudioClip c = Tone(330, 1234, 16000, 0.8);
  c.samples[5] = 1.5;  // clamps
  WriteWav(dir / "a.wav", c);
  AudioClip r = ReadWav(dir / "a.wav");
  ASSERT_EQ(r.size(), c.size());
  EXPECT_EQ(r.sample_rate, 16000);
  for (int64_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(r.samples[i], std::clamp(c.samples[i], -1.0, 1.0), 0.5 / 32767 + 1e-12);
  }
  const std::string bytes = Slurp(dir / "a.wav");
  EXPECT_EQ(bytes.size(), 44u + 2 * 1234);
  EXPECT_EQ(bytes.substr(0, 4), "RIFF");
  WriteWav(dir / "b.wav", r);
  EXPECT_EQ(Slurp(dir / "b.wav"), bytes);
  std::ofstream(dir / "bad.wav") << "not a wav";
  EXPECT_THROW(ReadWav(dir / "bad.wav"), IoError);
  EXPECT_THROW(ReadWav(dir / "missing.wav"), IoError);
}

TEST(MediaTest, FrameStackRoundTrip) {
  TempDir dir;
  VideoClip v(2, 3, 4);
  for (size_t i = 0; i < v.pixels.size(); ++i) v.pixels[i] = i / 23.0;
  WriteFrames(dir / "f.avf", v);
  const std::string bytes = Slurp(dir / "f.avf");
  ASSERT_EQ(bytes.size(), 16u + 24);
  EXPECT_EQ(bytes.substr(0, 4), "AVF1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 23]), 255);
  VideoClip r = ReadFrames(dir / "f.avf");
  EXPECT_EQ(r.num_frames, 2);
  for (size_t i = 0; i < v.pixels.size(); ++i) EXPECT_NEAR(r.pixels[i], v.pixels[i], 0.5 / 255);
  std::ofstream(dir / "g.avf", std::ios::binary) << bytes.substr(0, 30);
  EXPECT_THROW(ReadFrames(dir / "g.avf"), IoError);
}

TEST(ManifestTest, RoundTripCommentsAndValidation) {
  TempDir dir;
  std::ofstream(dir / "x.wav") << "";
  std::ofstream(dir / "x.avf") << "";
  {
    std::ofstream out(dir / "m.tsv");
    out << "# a comment\n# split: val\n\nu1\tx.wav\tx.avf\tabc\nu2\tx.wav\t-\tba\n";
  }
  Manifest m = ReadManifest(dir / "m.tsv");
  EXPECT_EQ(m.split, "val");
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0].wav_path, dir / "x.wav");
  EXPECT_EQ(m.records[1].frames_path, "");
  EXPECT_NO_THROW(m.Validate(Vocabulary("abc")));
  EXPECT_THROW(m.Validate(Vocabulary("ab")), ContractError);
  m.records[0].wav_path = dir / "nope.wav";
  EXPECT_THROW(m.Validate(Vocabulary("abc")), IoError);
  m.records[0].wav_path = dir / "x.wav";
  m.records[1].transcript = "";
  EXPECT_THROW(m.Validate(Vocabulary("abc")), ContractError);
  WriteManifest(dir / "n.tsv", m);
  Manifest back = ReadManifest(dir / "n.tsv");
  EXPECT_EQ(back.split, "val");
  EXPECT_EQ(back.records[0].id, "u1");
  std::ofstream(dir / "bad.tsv") << "only\ttwo\n";
  EXPECT_THROW(ReadManifest(dir / "bad.tsv"), IoError);
}

TEST(KeyValueTest, UnknownKeysRejected) {
  KeyValueConfig c = KeyValueConfig::Parse("a = 1\n# note\nb=2.5  # trailing\nlist = -5, 0,5\n");
  EXPECT_EQ(c.GetInt("a", 0), 1);
  EXPECT_EQ(c.GetDoubleList("list", {}), (std::vector<double>{-5, 0, 5}));
  EXPECT_THROW(c.CheckAllConsumed(), ConfigError);
  EXPECT_EQ(c.GetDouble("b", 0), 2.5);
  EXPECT_NO_THROW(c.CheckAllConsumed());
  EXPECT_THROW(KeyValueConfig::Parse("novalue\n"), ConfigError);
  KeyValueConfig bad = KeyValueConfig::Parse("x = abc\n");
  EXPECT_THROW(bad.GetDouble("x", 0), ConfigError);
  KeyValueConfig policy = KeyValueConfig::Parse("crop = 32\nhflip_prob = 0\n");
  EXPECT_EQ(AugmentPolicy::FromConfig(policy).crop, 32);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

TEST(SynthTest, DurationArithmetic) {
  SynthSpec spec;
  SynthUtterance u = RenderUtterance(spec, "x", "abc");
  EXPECT_EQ(u.audio.size(), 9600);
  EXPECT_EQ(u.video.num_frames, 15);
  EXPECT_EQ(u.video.height, 40);
  EXPECT_THROW(RenderUtterance(spec, "x", "az"), ContractError);
  SynthSpec bad;
  bad.alphabet_size = 11;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

// Nearest-template classification of each 0.2 s segment from the energy
// near every symbol's two tones.
TEST(SynthTest, SymbolSignaturesAreSeparable) {
  SynthSpec spec;
  spec.alphabet_size = 10;
  const int K = spec.alphabet_size;
  auto band_energy = [](const std::vector<double>& x, double hz) {
    double e = 0;
    for (double f = hz * 0.94; f <= hz * 1.06; f += 5.0) {
      std::complex<double> acc = 0;
      for (size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -2 * kPi * f * i / 16000);
      e += std::norm(acc);
    }
    return e;
  };
  int correct = 0, total = 0;
  for (int u = 0; u < 6; ++u) {
    const std::string id = "sep" + std::to_string(u);
    const std::string text = RandomTranscript(spec, id);
    SynthUtterance utt = RenderUtterance(spec, id, text);
    for (size_t s = 0; s < text.size(); ++s) {
      std::vector<double> seg(utt.audio.samples.begin() + s * 3200,
                              utt.audio.samples.begin() + (s + 1) * 3200);
      std::vector<double> feat;
      double norm = 0;
      for (int k = 0; k < K; ++k)
        for (double hz : SymbolTones(k)) {
          feat.push_back(band_energy(seg, hz));
          norm += feat.back() * feat.back();
        }
      int best = -1;
      double best_sim = -1;
      for (int k = 0; k < K; ++k) {
        // Template: unit energy on the symbol's own two bands.
        const double sim = (feat[2 * k] + feat[2 * k + 1]) / std::sqrt(2 * norm);
        if (sim > best_sim) best_sim = sim, best = k;
      }
      correct += best == text[s] - 'a';
      ++total;
    }
  }
  EXPECT_EQ(correct, total);
}

TEST(SynthTest, CorpusIsByteIdenticalForSameSeed) {
  TempDir a, b;
  SynthSpec spec;
  spec.num_train = 4;
  spec.num_val = 1;
  spec.num_test = 2;
  SynthCorpus ca = WriteSynthCorpus(spec, a.str());
  WriteSynthCorpus(spec, b.str());
  ASSERT_EQ(ca.train.records.size(), 4u);
  for (const auto& entry : fs::recursive_directory_iterator(a.str())) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.str());
    EXPECT_TRUE(Slurp(entry.path().string()) == Slurp(b / rel.string())) << rel;
  }
  Manifest m = ReadManifest(ca.train_path);
  EXPECT_EQ(m.split, "train");
  EXPECT_NO_THROW(m.Validate(Vocabulary(spec.alphabet())));
  VideoClip v = ReadFrames(m.records[0].frames_path);
  AudioClip w = ReadWav(m.records[0].wav_path);
  EXPECT_EQ(w.size(), v.num_frames * 640);
  EXPECT_EQ(static_cast<int64_t>(m.records[0].transcript.size()) * 5, v.num_frames);
  spec.seed = 1;
  TempDir c;
  WriteSynthCorpus(spec, c.str());
  EXPECT_TRUE(Slurp(a / "wav/train-00000.wav") != Slurp(c / "wav/train-00000.wav"));
}

TEST(SynthTest, BabbleHasSixTalkersWorthOfPower) {
  SynthSpec spec;
  AudioClip b = BabbleNoise(spec, 32000, 1);
  EXPECT_EQ(b.size(), 32000);
  EXPECT_GT(MeanSquare(b.samples), 0.0);
  EXPECT_EQ(BabbleNoise(spec, 32000, 1).samples, b.samples);
}
