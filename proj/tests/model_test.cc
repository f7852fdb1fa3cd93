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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "avsr/model/conformer.h"
#include "avsr/model/frontends.h"
#include "avsr/model/fusion_decoder.h"
#include "test_util.h"

using namespace avsr;
using avsr::testing::FrozenTrainContext;
using avsr::testing::MakeParam;
using avsr::testing::Pointers;
using avsr::testing::Rand;
using avsr::testing::Scalarize;

namespace {

bool RowsIdentical(const Tensor& t) {
  const int64_t n = t.dim(0), d = t.size() / n;
  for (int64_t r = 1; r < n; ++r)
    for (int64_t j = 0; j < d; ++j)
      if (t[r * d + j] != t[j]) return false;
  return true;
}

Tensor EvalAudio(AudioFrontend& fe, const Tensor& samples) {
  Tape tape(false);
  ForwardContext ctx{tape};
  return fe.Forward(ctx, tape.Constant(samples)).value();
}

Tensor EvalVisual(VisualFrontend& fe, const Tensor& frames) {
  Tape tape(false);
  ForwardContext ctx{tape};
  return fe.Forward(ctx, tape.Constant(frames)).value();
}

}  // namespace

// ---------------------------------------------------------------------------
// Front-ends

TEST(FrontendConfigTest, DownsampleGivesTwentyFiveFramesPerSecond) {
  FrontendConfig cfg = FrontendConfig::Full();
  EXPECT_EQ(cfg.audio_downsample(), 640);
  EXPECT_EQ(cfg.audio_downsample() * 25, cfg.sample_rate);
  cfg.audio_pool = 20;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(AudioFrontendTest, OneSecondGivesTwentyFiveFrames) {
  Rng rng(1);
  AudioFrontend full(FrontendConfig::Full(), rng);
  Tensor out = EvalAudio(full, Rand({16000}, 2));
  EXPECT_EQ(out.shape(), (Shape{25, 512}));
  AudioFrontend desk(FrontendConfig::Desk(), rng);
  EXPECT_EQ(EvalAudio(desk, Rand({16000}, 3)).shape(), (Shape{25, 64}));
}

TEST(AudioFrontendTest, ZeroWaveformGivesFiniteConstantRows) {
  Rng rng(4);
  AudioFrontend fe(FrontendConfig::Desk(), rng);
  Tensor out = EvalAudio(fe, Tensor({6400}));
  EXPECT_TRUE(AllFinite(out));
  EXPECT_TRUE(RowsIdentical(out));
}

TEST(AudioFrontendTest, FrameCountFollowsRateContract) {
  Rng rng(5);
  AudioFrontend fe(FrontendConfig::Desk(), rng);
  EXPECT_EQ(EvalAudio(fe, Rand({3200}, 6)).dim(0), 5);
  EXPECT_EQ(EvalAudio(fe, Rand({6400}, 6)).dim(0), 10);
  for (int64_t n : {640, 700, 1279, 1280, 5000, 9999}) {
    Tensor out = EvalAudio(fe, Rand({n}, n));
    EXPECT_EQ(out.dim(0), n * 25 / 16000) << n;
    EXPECT_TRUE(AllFinite(out));
  }
}

TEST(AudioFrontendTest, TooShortClipNamesMinimum) {
  Rng rng(7);
  AudioFrontend fe(FrontendConfig::Desk(), rng);
  try {
    EvalAudio(fe, Rand({600}, 8));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient samples"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("640"), std::string::npos);
  }
}

TEST(VisualFrontendTest, FrameCountAndFeatureDim) {
  Rng rng(9);
  VisualFrontend desk(FrontendConfig::Desk(), rng);
  EXPECT_EQ(EvalVisual(desk, Rand({29, 88, 88}, 10, 0, 1)).shape(), (Shape{29, 64}));
  EXPECT_EQ(EvalVisual(desk, Rand({1, 32, 32}, 11, 0, 1)).shape(), (Shape{1, 64}));
  VisualFrontend full(FrontendConfig::Full(), rng);
  EXPECT_EQ(EvalVisual(full, Rand({2, 88, 88}, 12, 0, 1)).shape(), (Shape{2, 512}));
  for (int64_t t : {2, 3, 7}) {
    EXPECT_EQ(EvalVisual(desk, Rand({t, 16, 16}, 13 + t, 0, 1)).dim(0), t);
  }
}

TEST(VisualFrontendTest, ConstantFramesGiveIdenticalRows) {
  Rng rng(20);
  VisualFrontend fe(FrontendConfig::Desk(), rng);
  // Zero temporal padding reaches the two frames at either end.
  Tensor out = EvalVisual(fe, Tensor::Full({9, 32, 32}, 0.4));
  Tensor interior({5, 64});
  for (int64_t i = 0; i < 5 * 64; ++i) interior[i] = out[2 * 64 + i];
  EXPECT_TRUE(RowsIdentical(interior));
  EXPECT_TRUE(RowsIdentical(EvalVisual(fe, Tensor({9, 32, 32}))));
}

TEST(VisualFrontendTest, SmallFramesNameFailingStage) {
  EXPECT_NO_THROW(VisualFrontend::CheckFrameSize(16, 16));
  try {
    VisualFrontend::CheckFrameSize(12, 40);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("stem"), std::string::npos);
  }
}

TEST(FrontendTest, AudioAndVisualAlignOverOneSecond) {
  Rng rng(21);
  AudioFrontend a(FrontendConfig::Desk(), rng);
  VisualFrontend v(FrontendConfig::Desk(), rng);
  EXPECT_EQ(EvalAudio(a, Rand({16000}, 22)).dim(0),
            EvalVisual(v, Rand({25, 32, 32}, 23, 0, 1)).dim(0));
}

TEST(FrontendTest, RandomClipsStayFinite) {
  Rng rng(24);
  AudioFrontend a(FrontendConfig::Desk(), rng);
  VisualFrontend v(FrontendConfig::Desk(), rng);
  for (int trial = 0; trial < 5; ++trial) {
    EXPECT_TRUE(AllFinite(EvalAudio(a, Rand({640 * (1 + trial)}, 30 + trial, -5, 5))));
    EXPECT_TRUE(AllFinite(EvalVisual(v, Rand({2 + trial, 20 + trial, 24}, 40 + trial))));
  }
}

TEST(ResidualBlockTest, ZeroResidualBranchPassesShortcut) {
  Rng rng(50);
  ResidualBlock block(1, 4, 4, 1, rng);
  Tensor x = Rand({4, 12}, 51, 0.0, 1.0);
  Tape tape(false);
  ForwardContext ctx{tape};
  EXPECT_EQ(MaxAbsDiff(block.Forward(ctx, tape.Constant(x)).value(), x), 0.0);

  ResidualBlock proj(1, 4, 6, 2, rng);
  Var xv = tape.Constant(x);
  Var shortcut = proj.proj_bn.Forward(
      ctx, ops::Conv1d(xv, tape.Param(proj.proj), Var(), 2, 0), 0);
  EXPECT_EQ(MaxAbsDiff(proj.Forward(ctx, xv).value(), ops::Relu(shortcut).value()), 0.0);
}

TEST(ResidualBlockTest, StrideTwoHalvesExtent) {
  Rng rng(52);
  Tape tape(false);
  ForwardContext ctx{tape};
  ResidualBlock b1(1, 3, 5, 2, rng);
  EXPECT_EQ(b1.Forward(ctx, tape.Constant(Rand({3, 20}, 53))).shape(), (Shape{5, 10}));
  ResidualBlock b2(2, 3, 5, 2, rng);
  EXPECT_EQ(b2.Forward(ctx, tape.Constant(Rand({2, 3, 8, 8}, 54))).shape(),
            (Shape{2, 5, 4, 4}));
}

TEST(ResidualBlockTest, GradientsFlowThroughBothBranches) {
  for (int rank : {1, 2}) {
    Rng rng(60 + rank);
    ResidualBlock block(rank, 2, 3, 2, rng);
    block.bn2.gamma.value = Rand({3}, 62, 0.5, 1.5);
    Parameter x = MakeParam("x", rank == 1 ? Rand({2, 8}, 63) : Rand({2, 2, 4, 4}, 63));
    ParamList list;
    block.Register(list, "block");
    auto params = Pointers(list);
    params.push_back(&x);
    auto loss = [&](Tape& tape) {
      FrozenTrainContext f(tape);
      return Scalarize(block.Forward(f.ctx, tape.Param(x)), 64);
    };
    EXPECT_LE(MaxRelError(CheckGradients(loss, params)), 1e-6) << "rank " << rank;
  }
}

// ---------------------------------------------------------------------------
// Conformer

TEST(ConformerConfigTest, Validation) {
  EXPECT_NO_THROW(ConformerConfig::Desk().Validate());
  EXPECT_NO_THROW(ConformerConfig::Full(4).Validate());
  ConformerConfig c = ConformerConfig::Desk();
  c.num_blocks = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = ConformerConfig::Desk();
  c.n_head = 5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = ConformerConfig::Desk();
  c.depthwise_kernel = 30;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ConformerEmbedTest, ShapesBiasAndLinearity) {
  Rng rng(70);
  ConformerConfig full = ConformerConfig::Full();
  full.num_blocks = 1;
  ConformerEncoder enc(full, 512, rng);
  Tape tape(false);
  ForwardContext ctx{tape};
  EXPECT_EQ(enc.Embed(ctx, tape.Constant(Rand({25, 512}, 71))).shape(), (Shape{25, 256}));
  Tensor z = enc.Embed(ctx, tape.Constant(Tensor({3, 512}))).value();
  EXPECT_TRUE(RowsIdentical(z));
  Tensor a = Rand({4, 512}, 72), b = Rand({2, 512}, 73);
  Var both = enc.Embed(ctx, ops::Concat({tape.Constant(a), tape.Constant(b)}, 0));
  Var pa = enc.Embed(ctx, tape.Constant(a));
  Var pb = enc.Embed(ctx, tape.Constant(b));
  EXPECT_EQ(MaxAbsDiff(both.value(), ops::Concat({pa, pb}, 0).value()), 0.0);
  EXPECT_THROW(enc.Embed(ctx, tape.Constant(Rand({4, 100}, 74))), ShapeError);
}

TEST(RelativeAttentionTest, SinglePositionAttendsToItself) {
  Rng rng(80);
  RelativeSelfAttention attn(8, 2, 0.0, rng);
  Tape tape(false);
  ForwardContext ctx{tape};
  Var x = tape.Constant(Rand({1, 8}, 81));
  AttentionTrace trace;
  Var y = attn.Forward(ctx, x, &trace);
  for (double w : trace.weights.data()) EXPECT_EQ(w, 1.0);
  Var ref = attn.out.Forward(ctx, attn.value.Forward(ctx, x));
  EXPECT_LE(MaxAbsDiff(y.value(), ref.value()), 1e-14);
}

TEST(RelativeAttentionTest, RowsSumToOne) {
  Rng rng(82);
  RelativeSelfAttention attn(16, 4, 0.0, rng);
  Tape tape(false);
  ForwardContext ctx{tape};
  AttentionTrace trace;
  attn.Forward(ctx, tape.Constant(Rand({9, 16}, 83, -3, 3)), &trace);
  ASSERT_EQ(trace.weights.shape(), (Shape{4, 9, 9}));
  for (int64_t r = 0; r < 4 * 9; ++r) {
    double s = 0.0;
    for (int64_t j = 0; j < 9; ++j) s += trace.weights[r * 9 + j];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(RelativeAttentionTest, PositionTermIsShiftEquivariant) {
  Rng rng(84);
  RelativeSelfAttention attn(16, 4, 0.0, rng);
  const int64_t T = 7;
  auto toeplitz_gap = [&](const Tensor& m) {
    double gap = 0.0;
    for (int64_t h = 0; h < 4; ++h)
      for (int64_t i = 0; i + 1 < T; ++i)
        for (int64_t j = 0; j + 1 < T; ++j)
          gap = std::max(gap, std::fabs(m[(h * T + i) * T + j] -
                                        m[(h * T + i + 1) * T + j + 1]));
    return gap;
  };
  Tape tape(false);
  ForwardContext ctx{tape};
  AttentionTrace random_trace;
  attn.Forward(ctx, tape.Constant(Rand({T, 16}, 85)), &random_trace);
  EXPECT_LE(toeplitz_gap(random_trace.position_bias_logits), 1e-12);
  EXPECT_GT(toeplitz_gap(random_trace.logits), 1e-6);
  // With identical frames every logit depends on the offset only.
  Tensor row = Rand({1, 16}, 86);
  Tensor same({T, 16});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < 16; ++j) same[t * 16 + j] = row[j];
  AttentionTrace const_trace;
  attn.Forward(ctx, tape.Constant(same), &const_trace);
  EXPECT_LE(toeplitz_gap(const_trace.logits), 1e-12);
}

TEST(FeedForwardTest, ZeroOutputLayerLeavesResidual) {
  Rng rng(90);
  ConformerConfig cfg = ConformerConfig::Desk();
  ConformerBlock block(cfg, rng);
  block.ffn1.w2.weight.value.Fill(0.0);
  block.ffn1.w2.bias.value.Fill(0.0);
  Tape tape(false);
  ForwardContext ctx{tape};
  Tensor x = Rand({5, 64}, 91);
  EXPECT_EQ(MaxAbsDiff(block.ffn1.Forward(ctx, tape.Constant(x)).value(), Tensor({5, 64})),
            0.0);
  ConformerConfig full = ConformerConfig::Full();
  FeedForward ffn(full.d_k, full.d_ff, full.dropout, rng);
  EXPECT_EQ(ffn.w1.weight.value.shape(), (Shape{256, 2048}));
  EXPECT_EQ(ffn.w2.weight.value.shape(), (Shape{2048, 256}));
}

TEST(FeedForwardTest, GradientCheck) {
  Rng rng(92);
  FeedForward ffn(6, 10, 0.1, rng);
  Parameter x = MakeParam("x", Rand({4, 6}, 93));
  ParamList list;
  ffn.Register(list, "ffn");
  auto params = Pointers(list);
  params.push_back(&x);
  auto loss = [&](Tape& tape) {
    FrozenTrainContext f(tape);
    return Scalarize(ffn.Forward(f.ctx, tape.Param(x)), 94);
  };
  EXPECT_LE(MaxRelError(CheckGradients(loss, params)), 1e-6);
}

TEST(ConvModuleTest, PreservesLength) {
  Rng rng(100);
  ConvModule conv(8, 31, 0.0, rng);
  Tape tape(false);
  ForwardContext ctx{tape};
  for (int64_t T = 1; T <= 64; ++T) {
    EXPECT_EQ(conv.Forward(ctx, tape.Constant(Rand({T, 8}, 100 + T))).dim(0), T);
  }
}

TEST(ConvModuleTest, DeltaKernelAndIdentityPointwiseIsGatedIdentity) {
  Rng rng(101);
  const int64_t d = 6, K = 31;
  ConvModule conv(d, K, 0.0, rng);
  conv.pointwise1.weight.value = Tensor({d, 2 * d});
  for (int64_t i = 0; i < d; ++i) conv.pointwise1.weight.value[i * 2 * d + i] = 1.0;
  conv.pointwise1.bias.value.Fill(0.0);
  conv.depthwise.value = Tensor({d, K});
  for (int64_t c = 0; c < d; ++c) conv.depthwise.value[c * K + K / 2] = 1.0;
  conv.pointwise2.weight.value = Tensor({d, d});
  for (int64_t i = 0; i < d; ++i) conv.pointwise2.weight.value[i * d + i] = 1.0;
  conv.pointwise2.bias.value.Fill(0.0);
  Tensor x = Rand({5, d}, 102, -2, 2);
  Tape tape(false);
  ForwardContext ctx{tape};
  Tensor y = conv.Forward(ctx, tape.Constant(x)).value();
  // Gates are zero, so GLU halves; batch norm at identity statistics scales
  // by 1 / sqrt(1 + eps).
  const double bn = 1.0 / std::sqrt(1.0 + 1e-5);
  for (int64_t t = 0; t < 5; ++t) {
    std::vector<double> h(d);
    double mean = 0.0;
    for (int64_t c = 0; c < d; ++c) {
      const double g = 0.5 * x[t * d + c] * bn;
      h[c] = g / (1.0 + std::exp(-g));
      mean += h[c];
    }
    mean /= d;
    double var = 0.0;
    for (double v : h) var += (v - mean) * (v - mean);
    var /= d;
    for (int64_t c = 0; c < d; ++c) {
      EXPECT_NEAR(y[t * d + c], (h[c] - mean) / std::sqrt(var + 1e-5), 1e-12);
    }
  }
}

TEST(ConvModuleTest, GradientCheck) {
  Rng rng(103);
  ConvModule conv(4, 5, 0.1, rng);
  conv.bn.gamma.value = Rand({4}, 104, 0.5, 1.5);
  Parameter x = MakeParam("x", Rand({7, 4}, 105));
  ParamList list;
  conv.Register(list, "conv");
  auto params = Pointers(list);
  params.push_back(&x);
  auto loss = [&](Tape& tape) {
    FrozenTrainContext f(tape);
    return Scalarize(conv.Forward(f.ctx, tape.Param(x)), 106);
  };
  EXPECT_LE(MaxRelError(CheckGradients(loss, params)), 1e-6);
}

TEST(ConformerBlockTest, ZeroedFeedForwardsLeaveAttentionAndConv) {
  Rng rng(110);
  ConformerBlock block(ConformerConfig::Desk(), rng);
  for (FeedForward* f : {&block.ffn1, &block.ffn2}) {
    f->w2.weight.value.Fill(0.0);
    f->w2.bias.value.Fill(0.0);
  }
  Tape tape(false);
  ForwardContext ctx{tape};
  Var x = tape.Constant(Rand({6, 64}, 111));
  Var y = block.Forward(ctx, x);
  Var h = ops::Add(x, block.attn.Forward(ctx, block.attn_norm.Forward(ctx, x)));
  h = ops::Add(h, block.conv.Forward(ctx, h));
  EXPECT_EQ(MaxAbsDiff(y.value(), h.value()), 0.0);
}

TEST(ConformerEncoderTest, ShapeAndPermutationSensitivity) {
  Rng rng(120);
  ConformerEncoder enc(ConformerConfig::Desk(), 64, rng);
  Tape tape(false);
  ForwardContext ctx{tape};
  for (int64_t T : {1, 3, 17}) {
    EXPECT_EQ(enc.Forward(ctx, tape.Constant(Rand({T, 64}, 121 + T))).shape(),
              (Shape{T, 64}));
  }
  Tensor x = Rand({8, 64}, 130);
  std::vector<int64_t> perm = {3, 0, 7, 1, 6, 2, 5, 4};
  Tensor px({8, 64});
  for (int64_t t = 0; t < 8; ++t)
    for (int64_t j = 0; j < 64; ++j) px[t * 64 + j] = x[perm[t] * 64 + j];
  Tensor y = enc.Forward(ctx, tape.Constant(x)).value();
  Tensor py = enc.Forward(ctx, tape.Constant(px)).value();
  double diff = 0.0;
  for (int64_t t = 0; t < 8; ++t)
    for (int64_t j = 0; j < 64; ++j)
      diff = std::max(diff, std::fabs(py[t * 64 + j] - y[perm[t] * 64 + j]));
  EXPECT_GT(diff, 1e-6);
}

TEST(ConformerEncoderTest, DeskPresetGradientCheck) {
  Rng rng(140);
  ConformerEncoder enc(ConformerConfig::Desk(), 12, rng);
  Parameter x = MakeParam("x", Rand({6, 12}, 141));
  ParamList list;
  enc.Register(list, "enc");
  for (auto& [name, p] : list.params) {
    if (name.find(".bn.gamma") != std::string::npos) p->value = Rand(p->value.shape(), 142, 0.5, 1.5);
  }
  auto params = Pointers(list);
  params.push_back(&x);
  auto loss = [&](Tape& tape) {
    FrozenTrainContext f(tape);
    return Scalarize(enc.Forward(f.ctx, tape.Param(x)), 143);
  };
  GradCheckOptions opt;
  opt.max_entries = 6;
  opt.seed = 144;
  auto report = CheckGradients(loss, params, opt);
  EXPECT_EQ(report.size(), params.size());
  EXPECT_LE(MaxRelError(report), 1e-4);
}

// ---------------------------------------------------------------------------
// Fusion and decoder

TEST(FusionTest, FullSizeShapesAndAlignmentError) {
  Rng rng(150);
  FusionMlp fusion(256, rng);
  EXPECT_EQ(fusion.in_proj.weight.value.shape(), (Shape{512, 1024}));
  EXPECT_EQ(fusion.out_proj.weight.value.shape(), (Shape{1024, 256}));
  Tape tape(false);
  ForwardContext ctx{tape};
  EXPECT_EQ(fusion.Forward(ctx, tape.Constant(Rand({5, 256}, 151)),
                           tape.Constant(Rand({5, 256}, 152))).shape(),
            (Shape{5, 256}));
  try {
    fusion.Forward(ctx, tape.Constant(Rand({5, 256}, 151)), tape.Constant(Rand({4, 256}, 152)));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("5"), std::string::npos);
    EXPECT_NE(msg.find("4"), std::string::npos);
  }
}

TEST(FusionTest, ZeroVisualStreamUsesAudioRowsOnly) {
  Rng rng(153);
  const int64_t d = 4;
  FusionMlp fusion(d, rng);
  Tensor a = Rand({3, d}, 154);
  Tape tape(false);
  ForwardContext ctx{tape};
  Tensor y = fusion.Forward(ctx, tape.Constant(a), tape.Constant(Tensor({3, d}))).value();
  Tensor w_audio({d, 4 * d});
  for (int64_t i = 0; i < d * 4 * d; ++i) w_audio[i] = fusion.in_proj.weight.value[i];
  Var h = ops::Linear(tape.Constant(a), tape.Constant(w_audio), tape.Param(fusion.in_proj.bias));
  h = ops::Relu(fusion.bn.Forward(ctx, h, 1));
  EXPECT_LE(MaxAbsDiff(y, fusion.out_proj.Forward(ctx, h).value()), 1e-13);
}

TEST(FusionTest, EvalOutputIndependentOfBatchComposition) {
  Rng rng(155);
  FusionMlp fusion(4, rng);
  Tensor a = Rand({6, 4}, 156), v = Rand({6, 4}, 157);
  Tape tape(false);
  ForwardContext ctx{tape};
  Tensor full = fusion.Forward(ctx, tape.Constant(a), tape.Constant(v)).value();
  Var a2 = ops::Slice(tape.Constant(a), 0, 2, 3);
  Var v2 = ops::Slice(tape.Constant(v), 0, 2, 3);
  Tensor part = fusion.Forward(ctx, a2, v2).value();
  for (int64_t i = 0; i < 12; ++i) EXPECT_EQ(part[i], full[8 + i]);
}

TEST(FusionTest, GradientCheck) {
  Rng rng(158);
  FusionMlp fusion(3, rng);
  Parameter a = MakeParam("a", Rand({5, 3}, 159));
  Parameter v = MakeParam("v", Rand({5, 3}, 160));
  ParamList list;
  fusion.Register(list, "fusion");
  auto params = Pointers(list);
  params.push_back(&a);
  params.push_back(&v);
  auto loss = [&](Tape& tape) {
    FrozenTrainContext f(tape);
    return Scalarize(fusion.Forward(f.ctx, tape.Param(a), tape.Param(v)), 161);
  };
  EXPECT_LE(MaxRelError(CheckGradients(loss, params)), 1e-6);
}

class DecoderTest : public ::testing::Test {
 protected:
  DecoderTest() : vocab_("abcde"), rng_(170) {
    DecoderConfig cfg = DecoderConfig::FromEncoder(ConformerConfig::Desk());
    decoder_ = TransformerDecoder(cfg, vocab_, rng_);
  }
  Vocabulary vocab_;
  Rng rng_;
  TransformerDecoder decoder_;
};

TEST_F(DecoderTest, VocabularyLayout) {
  EXPECT_EQ(vocab_.blank(), 0);
  EXPECT_EQ(vocab_.sos(), 6);
  EXPECT_EQ(vocab_.eos(), 7);
  EXPECT_EQ(vocab_.pad(), 8);
  EXPECT_EQ(vocab_.size(), 9);
  EXPECT_EQ(vocab_.Encode("bad"), (std::vector<int>{2, 1, 4}));
  EXPECT_EQ(vocab_.Decode({6, 2, 1, 4, 7}), "bad");
  EXPECT_THROW(vocab_.Encode("z"), ContractError);
  EXPECT_THROW(Vocabulary("aa"), ConfigError);
  TokenSequence seq{{1, 2}};
  EXPECT_EQ(seq.DecoderInput(vocab_), (std::vector<int>{6, 1, 2}));
  EXPECT_EQ(seq.DecoderTarget(vocab_), (std::vector<int>{1, 2, 7}));
  EXPECT_THROW(TokenSequence{{}}.Validate(vocab_, 5), ContractError);
  EXPECT_THROW(TokenSequence{{0}}.Validate(vocab_, 5), ContractError);
  TokenSequence long_seq{{1, 2, 3}};
  EXPECT_THROW(long_seq.Validate(vocab_, 2), ContractError);
}

TEST_F(DecoderTest, EmbeddingPositionPattern) {
  Tape tape(false);
  ForwardContext ctx{tape};
  EXPECT_EQ(decoder_.config().num_blocks, 6);
  ParamList list;
  decoder_.Register(list, "dec");
  const Tensor& table = list.params.front().second->value;
  Tensor e = decoder_.Embed(ctx, {vocab_.sos(), 3, 3}).value();
  const int64_t d = 64;
  for (int64_t j = 0; j < d; ++j) {
    EXPECT_NEAR(e[j] - table[vocab_.sos() * d + j], j % 2 == 0 ? 0.0 : 1.0, 1e-15);
  }
  double diff = 0.0;
  for (int64_t j = 0; j < d; ++j) diff = std::max(diff, std::fabs(e[d + j] - e[2 * d + j]));
  EXPECT_GT(diff, 1e-3);
  EXPECT_THROW(decoder_.Embed(ctx, {}), ContractError);
  EXPECT_THROW(decoder_.Embed(ctx, {1, 2}), ContractError);
  EXPECT_THROW(decoder_.Embed(ctx, {vocab_.sos(), vocab_.pad()}), ContractError);
}

TEST_F(DecoderTest, CausalityForEveryPosition) {
  Tape tape(false);
  ForwardContext ctx{tape};
  Var memory = tape.Constant(Rand({7, 64}, 171));
  std::vector<int> prefix = {vocab_.sos(), 1, 2, 3, 4, 5};
  Tensor base = decoder_.Forward(ctx, prefix, memory).value();
  ASSERT_EQ(base.shape(), (Shape{6, vocab_.size()}));
  const int64_t K = vocab_.size();
  std::mt19937_64 rng(172);
  for (size_t j = 1; j < prefix.size(); ++j) {
    std::vector<int> changed = prefix;
    changed[j] = 1 + static_cast<int>((prefix[j] + rng() % 4) % 5);
    if (changed[j] == prefix[j]) changed[j] = prefix[j] % 5 + 1;
    Tensor out = decoder_.Forward(ctx, changed, memory).value();
    for (size_t i = 0; i < j; ++i)
      for (int64_t k = 0; k < K; ++k) ASSERT_EQ(out[i * K + k], base[i * K + k]);
    double diff = 0.0;
    for (int64_t k = 0; k < K; ++k) diff = std::max(diff, std::fabs(out[j * K + k] - base[j * K + k]));
    EXPECT_GT(diff, 0.0);
  }
}

TEST_F(DecoderTest, CrossAttentionRowsSumToOne) {
  Tape tape(false);
  ForwardContext ctx{tape};
  std::vector<AttentionTrace> traces;
  decoder_.Forward(ctx, {vocab_.sos(), 1, 2}, tape.Constant(Rand({5, 64}, 173)), &traces);
  ASSERT_EQ(traces.size(), 6u);
  for (const auto& t : traces) {
    ASSERT_EQ(t.weights.shape(), (Shape{4, 3, 5}));
    for (int64_t r = 0; r < 12; ++r) {
      double s = 0.0;
      for (int64_t j = 0; j < 5; ++j) s += t.weights[r * 5 + j];
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST_F(DecoderTest, PadEmbeddingReceivesNoGradient) {
  Tape tape;
  ForwardContext ctx{tape};
  ParamList list;
  decoder_.Register(list, "dec");
  Parameter& table = *list.params.front().second;
  Var logits = decoder_.Forward(ctx, {vocab_.sos(), 1, 2}, tape.Constant(Rand({4, 64}, 174)));
  tape.Backward(Scalarize(logits, 175));
  Tensor g = tape.ParamGrad(table);
  const int64_t d = 64;
  for (int64_t j = 0; j < d; ++j) EXPECT_EQ(g[vocab_.pad() * d + j], 0.0);
  double used = 0.0;
  for (int64_t j = 0; j < d; ++j) used += std::fabs(g[vocab_.sos() * d + j]);
  EXPECT_GT(used, 0.0);
}

TEST(DecoderGradTest, DeskPresetGradientCheck) {
  Rng rng(180);
  Vocabulary vocab("abc");
  DecoderConfig cfg = DecoderConfig::FromEncoder(ConformerConfig::Desk());
  TransformerDecoder decoder(cfg, vocab, rng);
  Parameter memory = MakeParam("memory", Rand({5, 64}, 181));
  ParamList list;
  decoder.Register(list, "dec");
  auto params = Pointers(list);
  params.push_back(&memory);
  auto loss = [&](Tape& tape) {
    FrozenTrainContext f(tape);
    return Scalarize(decoder.Forward(f.ctx, {vocab.sos(), 1, 3, 2}, tape.Param(memory)), 182);
  };
  GradCheckOptions opt;
  opt.max_entries = 4;
  opt.seed = 183;
  EXPECT_LE(MaxRelError(CheckGradients(loss, params, opt)), 1e-4);
}
