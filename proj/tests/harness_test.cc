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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "avsr/dataflow/synth.h"
#include "avsr/harness/checkpoint.h"
#include "avsr/harness/data.h"
#include "avsr/harness/gradcheck_suite.h"
#include "avsr/harness/lm_file.h"
#include "avsr/harness/model.h"
#include "avsr/harness/optim.h"
#include "avsr/harness/train.h"
#include "avsr/harness/wer.h"

namespace avsr {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("avsr_harness_" + std::string(::testing::UnitTest::GetInstance()
                                               ->current_test_info()->name()) +
             "_" + std::to_string(counter_++));
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

std::string ReadBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ModelConfig TinyModel(Modality m, const std::string& alphabet = "abc") {
  ModelConfig c;
  c.modality = m;
  c.alphabet = alphabet;
  c.frontend.channels = {4, 4, 8, 8};
  c.encoder.num_blocks = 1;
  c.encoder.d_k = c.encoder.d_v = 16;
  c.encoder.d_ff = 32;
  c.encoder.n_head = 2;
  c.encoder.dropout = 0.0;
  c.decoder_blocks = 1;
  c.seed = 5;
  return c;
}

// A few short utterances over "abc", written once per test binary.
const SynthCorpus& TinyCorpus() {
  static const SynthCorpus corpus = [] {
    SynthSpec spec;
    spec.alphabet_size = 3;
    spec.num_train = 6;
    spec.num_val = 2;
    spec.num_test = 2;
    spec.max_length = 3;
    spec.seed = 11;
    const fs::path dir = fs::temp_directory_path() / "avsr_harness_corpus";
    fs::remove_all(dir);
    return WriteSynthCorpus(spec, dir.string());
  }();
  return corpus;
}

DataOptions TinyOptions(Modality m) {
  DataOptions o;
  o.modality = m;
  o.policy.crop = 32;
  if (m != Modality::kAudio) o.frame_stats = ComputeFrameStats(TinyCorpus().train);
  return o;
}

// ---------------------------------------------------------------------------
// Learning-rate schedule and optimizer

TEST(NoamTest, PeakAtWarmup) {
  EXPECT_EQ(NoamLr(400, 400, 4e-4), 4e-4);
  EXPECT_DOUBLE_EQ(NoamLr(1600, 400, 4e-4), 2e-4);
  EXPECT_DOUBLE_EQ(NoamLr(200, 400, 4e-4), 2e-4);
  EXPECT_DOUBLE_EQ(NoamLr(1, 400, 4e-4), 1e-6);
  EXPECT_LT(NoamLr(401, 400, 4e-4), 4e-4);
  EXPECT_THROW(NoamLr(0, 400, 4e-4), ContractError);
  EXPECT_THROW(NoamLr(1, 0, 4e-4), ContractError);
}

struct Toy {
  Parameter p;
  ParamList list;
  explicit Toy(std::vector<double> v) {
    p.name = "w";
    p.value = Tensor({static_cast<int64_t>(v.size())}, v);
    list.Add("w", p);
  }
};

TEST(AdamTest, FirstStepClosedForm) {
  Toy toy({0.5, -1.0, 2.0});
  AdamConfig cfg;
  cfg.clip_norm = 0.0;
  Adam adam(toy.list, cfg);
  const std::vector<double> g = {0.3, -0.02, 1.5};
  const double lr = 1e-3;
  adam.Step({Tensor({3}, g)}, lr);
  // Bias correction makes the first update lr * g / (|g| + eps).
  const std::vector<double> p0 = {0.5, -1.0, 2.0};
  for (int i = 0; i < 3; ++i) {
    const double expected = p0[i] - lr * g[i] / (std::fabs(g[i]) + cfg.eps);
    EXPECT_NEAR(toy.p.value[i], expected, 1e-12);
  }
  EXPECT_EQ(adam.step(), 1);
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
  Toy toy({0.5, -1.0, 2.0});
  Adam adam(toy.list, AdamConfig{});
  for (int s = 0; s < 3; ++s) adam.Step({Tensor({3})}, 1e-2);
  EXPECT_EQ(toy.p.value[0], 0.5);
  EXPECT_EQ(toy.p.value[1], -1.0);
  EXPECT_EQ(toy.p.value[2], 2.0);
}

TEST(AdamTest, TwoStepsMatchReference) {
  Toy toy({1.0, 2.0, -3.0});
  AdamConfig cfg;
  cfg.clip_norm = 0.0;
  Adam adam(toy.list, cfg);
  const std::vector<std::vector<double>> grads = {{0.1, -0.4, 0.9}, {-0.2, 0.3, 0.5}};
  const std::vector<double> lrs = {1e-2, 2e-2};
  std::vector<double> p = {1.0, 2.0, -3.0}, m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 2; ++t) {
    adam.Step({Tensor({3}, grads[t - 1])}, lrs[t - 1]);
    for (int i = 0; i < 3; ++i) {
      const double g = grads[t - 1][i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      p[i] -= lrs[t - 1] * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(toy.p.value[i], p[i], 1e-12);
}

TEST(AdamTest, ClipsGlobalNorm) {
  Toy a({0.0, 0.0}), b({0.0, 0.0});
  AdamConfig clip;
  clip.clip_norm = 5.0;
  AdamConfig none;
  none.clip_norm = 0.0;
  Adam ca(a.list, clip), cb(b.list, none);
  // Norm 10 is scaled to 5; bias-corrected Adam is scale-invariant up to eps
  // on the first step, so compare moments instead.
  EXPECT_DOUBLE_EQ(ca.Step({Tensor({2}, {6.0, 8.0})}, 1e-3), 10.0);
  cb.Step({Tensor({2}, {3.0, 4.0})}, 1e-3);
  EXPECT_NEAR(ca.first_moments()[0][0], cb.first_moments()[0][0], 1e-15);
  EXPECT_NEAR(ca.second_moments()[0][1], cb.second_moments()[0][1], 1e-15);
}

TEST(AdamTest, NonFiniteGradientNamesParameter) {
  Toy toy({1.0, 2.0});
  Adam adam(toy.list, AdamConfig{});
  try {
    adam.Step({Tensor({2}, {1.0, std::nan("")})}, 1e-3);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("w"), std::string::npos);
  }
  EXPECT_EQ(toy.p.value[0], 1.0);
}

// ---------------------------------------------------------------------------
// Error rate

TEST(WerTest, HandComputedCases) {
  EXPECT_DOUBLE_EQ(EvaluateWer({"the cat"}, {"the cat sat"}).rate(), 1.0 / 3.0);
  // One substitution and one insertion over four reference words.
  const WerResult r = EvaluateWer({"a x c d e"}, {"a b c d"});
  EXPECT_EQ(r.counts.substitutions, 1);
  EXPECT_EQ(r.counts.insertions, 1);
  EXPECT_DOUBLE_EQ(r.rate(), 0.5);
  EXPECT_DOUBLE_EQ(EvaluateWer({"a b c"}, {"a b c"}).rate(), 0.0);
}

TEST(WerTest, InsertionsOnly) {
  for (int k = 1; k <= 4; ++k) {
    std::string hyp = "one two three";
    for (int i = 0; i < k; ++i) hyp += " extra";
    EXPECT_DOUBLE_EQ(EvaluateWer({hyp}, {"one two three"}).rate(), k / 3.0);
  }
}

TEST(WerTest, CorpusLevelPoolsCounts) {
  const WerResult r = EvaluateWer({"a", "x y z"}, {"a b", "x y z"});
  EXPECT_EQ(r.reference_tokens, 5);
  EXPECT_DOUBLE_EQ(r.rate(), 0.2);
}

TEST(WerTest, CharacterUnit) {
  const WerResult r = EvaluateWer({"abd"}, {"abc"}, ErrorUnit::kCharacter);
  EXPECT_EQ(r.reference_tokens, 3);
  EXPECT_DOUBLE_EQ(r.rate(), 1.0 / 3.0);
}

TEST(WerTest, EmptyReferencesAreExcluded) {
  const WerResult r = EvaluateWer({"junk", "a b"}, {"", "a b"});
  EXPECT_EQ(r.excluded, 1);
  EXPECT_DOUBLE_EQ(r.rate(), 0.0);
  EXPECT_THROW(EvaluateWer({"x"}, {""}), ContractError);
  EXPECT_THROW(EvaluateWer({"x", "y"}, {"x"}), ContractError);
}

// ---------------------------------------------------------------------------
// Checkpoints and configuration

TEST(CheckpointTest, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  AvsrModel a(TinyModel(Modality::kAudioVisual));
  Adam adam(a.params(), AdamConfig{});
  std::vector<Tensor> grads;
  for (const auto& [name, p] : a.params().params) {
    grads.push_back(Tensor::Full(p->value.shape(), 0.01));
  }
  adam.Step(grads, 1e-3);
  SaveCheckpoint(dir / "a.ckpt", a, {1, "rng-state", "", "crop=32\n"}, &adam);

  ModelConfig other = TinyModel(Modality::kAudioVisual);
  other.seed = 99;
  AvsrModel b(other);
  Adam adam_b(b.params(), AdamConfig{});
  const CheckpointMeta meta = LoadCheckpoint(dir / "a.ckpt", b, &adam_b);
  EXPECT_EQ(meta.step, 1);
  EXPECT_EQ(meta.rng_state, "rng-state");
  EXPECT_EQ(meta.data_config, "crop=32\n");
  EXPECT_EQ(adam_b.step(), 1);
  SaveCheckpoint(dir / "b.ckpt", b, meta, &adam_b);
  EXPECT_TRUE(ReadBytes(dir / "a.ckpt") == ReadBytes(dir / "b.ckpt"));
}

TEST(CheckpointTest, RejectsDifferentConfiguration) {
  TempDir dir;
  AvsrModel a(TinyModel(Modality::kAudio));
  SaveCheckpoint(dir / "a.ckpt", a, {});
  AvsrModel b(TinyModel(Modality::kAudio, "abcd"));
  EXPECT_THROW(LoadCheckpoint(dir / "a.ckpt", b), ConfigError);
  AvsrModel c(TinyModel(Modality::kAudioVisual));
  EXPECT_THROW(LoadCheckpoint(dir / "a.ckpt", c), ConfigError);
}

TEST(CheckpointTest, RejectsCorruptFiles) {
  TempDir dir;
  AvsrModel a(TinyModel(Modality::kAudio));
  SaveCheckpoint(dir / "a.ckpt", a, {});
  const std::string bytes = ReadBytes(dir / "a.ckpt");
  std::ofstream(dir / "t.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  std::ofstream(dir / "m.ckpt", std::ios::binary) << "NOTACKPT" << bytes.substr(8);
  AvsrModel b(TinyModel(Modality::kAudio));
  EXPECT_THROW(LoadCheckpoint(dir / "t.ckpt", b), IoError);
  EXPECT_THROW(LoadCheckpoint(dir / "m.ckpt", b), IoError);
  EXPECT_THROW(LoadCheckpoint(dir / "missing.ckpt", b), IoError);
}

TEST(CheckpointTest, FingerprintRoundTrips) {
  const ModelConfig c = TinyModel(Modality::kVisual);
  KeyValueConfig kv = KeyValueConfig::Parse(c.Fingerprint());
  EXPECT_EQ(ModelConfig::FromConfig(kv).Fingerprint(), c.Fingerprint());
}

TEST(ConfigTest, UnknownKeyIsRejected) {
  KeyValueConfig kv = KeyValueConfig::Parse("alphabet=abc\nbatch_size=4\nlearning_rate=1\n");
  try {
    RunConfig::FromConfig(kv);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(ConfigTest, ReadsTrainingAndDecodingKeys) {
  KeyValueConfig kv = KeyValueConfig::Parse(
      "alphabet=abc\nbatch_size=4\npeak_lr=1e-3\nwarmup_steps=50\nalpha=0\nbeam=3\n"
      "lambda=0.2\nbeta=0\nwer_unit=char\ncrop=24\n");
  const RunConfig r = RunConfig::FromConfig(kv);
  EXPECT_EQ(r.train.batch_size, 4);
  EXPECT_EQ(r.train.peak_lr, 1e-3);
  EXPECT_EQ(r.train.warmup_steps, 50);
  EXPECT_EQ(r.train.alpha, 0.0);
  EXPECT_EQ(r.decode.beam, 3);
  EXPECT_EQ(r.decode.ctc_weight, 0.2);
  EXPECT_EQ(r.train.wer_unit, ErrorUnit::kCharacter);
  EXPECT_EQ(r.augment.crop, 24);
  KeyValueConfig bad = KeyValueConfig::Parse("alpha=1.5\n");
  EXPECT_THROW(RunConfig::FromConfig(bad), ConfigError);
}

TEST(DataTest, FingerprintRestoresPreprocessing) {
  DataOptions a;
  a.frame_stats = {0.123456789, 0.0456};
  a.policy.crop = 24;
  DataOptions b;
  ApplyDataFingerprint(DataFingerprint(a), b);
  EXPECT_EQ(b.frame_stats.mean, a.frame_stats.mean);
  EXPECT_EQ(b.frame_stats.stddev, a.frame_stats.stddev);
  EXPECT_EQ(b.policy.crop, 24);
}

TEST(DataTest, LoadsBothStreamsAndExcludesLongUtterances) {
  const SynthCorpus& c = TinyCorpus();
  Vocabulary vocab("abc");
  Dataset all(c.train, vocab, TinyOptions(Modality::kAudioVisual));
  ASSERT_EQ(all.size(), c.train.records.size());
  const Sample s = all.Load(0, false, 0);
  EXPECT_EQ(s.frames.dim(1), 32);
  EXPECT_EQ(s.audio.size(), s.frames.dim(0) * 640);
  EXPECT_EQ(vocab.Decode(s.target), c.train.records[0].transcript);

  DataOptions short_only = TinyOptions(Modality::kAudioVisual);
  short_only.max_frames = 10;  // two symbols
  Dataset cut(c.train, vocab, short_only);
  int64_t longer = 0;
  for (const auto& r : c.train.records) longer += r.transcript.size() > 2;
  EXPECT_EQ(cut.excluded(), longer);
  EXPECT_EQ(cut.size() + static_cast<size_t>(longer), c.train.records.size());
}

// ---------------------------------------------------------------------------
// Trainer

TrainConfig SmallTrain() {
  TrainConfig t;
  t.batch_size = 3;
  t.warmup_steps = 10;
  t.peak_lr = 1e-3;
  t.dtype = DType::kFloat64;
  t.seed = 3;
  return t;
}

TEST(TrainerTest, LoggedLossMatchesRecomputedLoss) {
  const SynthCorpus& c = TinyCorpus();
  Vocabulary vocab("abc");
  Dataset train(c.train, vocab, TinyOptions(Modality::kAudioVisual));
  AvsrModel model(TinyModel(Modality::kAudioVisual));
  AvsrModel twin(TinyModel(Modality::kAudioVisual));
  Trainer trainer(model, SmallTrain(), train);
  const std::vector<size_t> batch = {0, 1, 2};

  std::vector<Sample> samples;
  std::vector<const Sample*> ptrs;
  for (size_t idx : batch) samples.push_back(train.Load(idx, true, trainer.SampleSeed(0, idx)));
  for (const Sample& s : samples) ptrs.push_back(&s);
  Tape tape;
  std::vector<BatchNormUpdate> sink;
  ForwardContext ctx{tape, true, nullptr, &sink};
  const std::vector<LossBreakdown> losses = twin.LossBatch(ctx, ptrs, 0.3);
  double expected = 0.0;
  for (size_t i = 0; i < losses.size(); ++i) {
    expected += losses[i].loss.value().item() / samples[i].target.size();
  }
  expected /= 3.0;
  const StepLog log = trainer.Step(batch, 0);
  EXPECT_NEAR(log.loss, expected, 1e-10 * std::fabs(expected));
  EXPECT_NEAR(log.loss, 0.3 * log.ctc + 0.7 * log.ce, 1e-10 * std::fabs(expected));
  EXPECT_EQ(log.step, 1);
  EXPECT_EQ(log.used, 3);
  EXPECT_GT(log.grad_norm, 0.0);
}

TEST(ModelTest, BatchStatisticsArePooledInTrainingOnly) {
  const SynthCorpus& c = TinyCorpus();
  Vocabulary vocab("abc");
  Dataset train(c.train, vocab, TinyOptions(Modality::kAudioVisual));
  AvsrModel model(TinyModel(Modality::kAudioVisual));
  const Sample a = train.Load(0, false, 0), b = train.Load(1, false, 0);
  for (bool training : {false, true}) {
    Tape tape;
    std::vector<BatchNormUpdate> sink;
    ForwardContext ctx{tape, training, nullptr, &sink};
    const Tensor alone = model.Encode(ctx, a).memory.value();
    const std::vector<EncoderOutput> both = model.EncodeBatch(ctx, {&a, &b});
    ASSERT_EQ(both.size(), 2u);
    EXPECT_EQ(both[0].memory.shape(), alone.shape());
    EXPECT_EQ(both[1].memory.dim(0), b.num_frames());
    double diff = 0.0;
    for (int64_t i = 0; i < alone.size(); ++i) {
      diff = std::max(diff, std::fabs(alone[i] - both[0].memory.value()[i]));
    }
    if (training) {
      EXPECT_GT(diff, 1e-6);
    } else {
      EXPECT_EQ(diff, 0.0);
    }
  }
}

TEST(TrainerTest, OneBatchNormUpdatePerStep) {
  const SynthCorpus& c = TinyCorpus();
  Vocabulary vocab("abc");
  Dataset train(c.train, vocab, TinyOptions(Modality::kAudio));
  AvsrModel model(TinyModel(Modality::kAudio));
  Trainer trainer(model, SmallTrain(), train);
  std::vector<double> before;
  for (const auto& [name, buf] : model.params().buffers) before.push_back((*buf)[0]);
  trainer.Step({0, 1, 2}, 0);
  const auto& buffers = model.params().buffers;
  for (size_t i = 0; i < buffers.size(); ++i) {
    if (buffers[i].first.find("num_updates") == std::string::npos) continue;
    EXPECT_EQ((*buffers[i].second)[0], before[i] + 1.0) << buffers[i].first;
  }
}

std::string RunSteps(uint64_t seed, int steps) {
  const SynthCorpus& c = TinyCorpus();
  Vocabulary vocab("abc");
  DataOptions opts = TinyOptions(Modality::kAudio);
  Dataset train(c.train, vocab, opts);
  ModelConfig mc = TinyModel(Modality::kAudio);
  mc.encoder.dropout = 0.1;
  AvsrModel model(mc);
  TrainConfig t = SmallTrain();
  t.seed = seed;
  t.max_steps = steps;
  Trainer trainer(model, t, train);
  std::ostringstream log;
  trainer.Run(&log);
  return log.str();
}

TEST(TrainerTest, SeededRunsAreReproducible) {
  const std::string a = RunSteps(4, 3), b = RunSteps(4, 3), c = RunSteps(5, 3);
  EXPECT_FALSE(a.empty());
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(TrainerTest, EpochOrderIsAPermutation) {
  const SynthCorpus& c = TinyCorpus();
  Dataset train(c.train, Vocabulary("abc"), TinyOptions(Modality::kAudio));
  AvsrModel model(TinyModel(Modality::kAudio));
  Trainer trainer(model, SmallTrain(), train);
  std::vector<size_t> o0 = trainer.EpochOrder(0), o1 = trainer.EpochOrder(1);
  EXPECT_NE(o0, o1);
  std::sort(o0.begin(), o0.end());
  for (size_t i = 0; i < o0.size(); ++i) EXPECT_EQ(o0[i], i);
}

TEST(TrainerTest, RunWritesCheckpointsThatReload) {
  TempDir dir;
  const SynthCorpus& c = TinyCorpus();
  Vocabulary vocab("abc");
  Dataset train(c.train, vocab, TinyOptions(Modality::kVisual));
  Dataset val(c.val, vocab, TinyOptions(Modality::kVisual));
  AvsrModel model(TinyModel(Modality::kVisual));
  TrainConfig t = SmallTrain();
  t.max_steps = 2;
  t.eval_every = 1;
  t.restore_best = false;
  Trainer trainer(model, t, train, &val);
  std::ostringstream log;
  const TrainSummary s = trainer.Run(&log, dir.str());
  EXPECT_EQ(s.steps, 2);
  EXPECT_TRUE(std::isfinite(s.best_val_wer));
  EXPECT_NE(log.str().find("val_wer="), std::string::npos);
  ASSERT_TRUE(fs::exists(dir / "best.ckpt"));
  const CheckpointMeta meta = PeekCheckpoint(dir / "last.ckpt");
  EXPECT_EQ(meta.step, 2);
  DataOptions restored;
  ApplyDataFingerprint(meta.data_config, restored);
  EXPECT_EQ(restored.frame_stats.mean, train.options().frame_stats.mean);
  AvsrModel again(TinyModel(Modality::kVisual));
  LoadCheckpoint(dir / "last.ckpt", again);
  for (size_t i = 0; i < model.params().params.size(); ++i) {
    const Tensor& x = model.params().params[i].second->value;
    const Tensor& y = again.params().params[i].second->value;
    for (int64_t j = 0; j < x.size(); ++j) ASSERT_EQ(x[j], y[j]);
  }
}

// ---------------------------------------------------------------------------
// Language-model files

TEST(LanguageModelFileTest, TrainSaveLoad) {
  TempDir dir;
  Vocabulary vocab("ab");
  LmTrainConfig cfg;
  cfg.model = {1, 16, 2, 32, 0.0};
  cfg.steps = 60;
  cfg.batch_size = 4;
  cfg.warmup_steps = 10;
  cfg.peak_lr = 3e-3;
  Rng rng(1);
  TinyTransformerLM lm(vocab, cfg.model, rng);
  const std::vector<int> ab = vocab.Encode("ab");
  const double before = lm.NextLogProbs(ab)[vocab.eos()];
  TrainLanguageModel(lm, {"ab", "abab", "ababab"}, cfg);
  // Every training text ends right after a 'b'.
  EXPECT_GT(lm.NextLogProbs(ab)[vocab.eos()], before);
  SaveLanguageModel(dir / "lm.bin", lm, cfg.model);
  const auto loaded = LoadLanguageModel(dir / "lm.bin");
  EXPECT_EQ(loaded->vocab().alphabet(), "ab");
  const std::vector<double> x = lm.NextLogProbs({1, 2, 1}), y = loaded->NextLogProbs({1, 2, 1});
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}

// ---------------------------------------------------------------------------
// Gradient-check driver

TEST(GradCheckSuiteTest, EveryModulePasses) {
  for (const std::string& m : GradCheckModules()) {
    const GradCheckReport r = RunGradCheck(m, 7);
    EXPECT_TRUE(r.passed) << m << " max_rel_error=" << r.max_rel_error;
    EXPECT_FALSE(r.entries.empty()) << m;
  }
}

TEST(GradCheckSuiteTest, UnknownModuleIsAConfigError) {
  EXPECT_THROW(RunGradCheck("lstm", 0), ConfigError);
}

}  // namespace
}  // namespace avsr
