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
#include "avsr/harness/gradcheck_suite.h"

#include <cmath>
#include <functional>
#include <map>

#include "avsr/harness/model.h"
#include "avsr/objectives/losses.h"

namespace avsr {
namespace {

struct Frozen {
  std::vector<BatchNormUpdate> sink;
  ForwardContext ctx;
  explicit Frozen(Tape& tape) : ctx{tape, true, nullptr, &sink, 0.0} {}
};

Tensor Uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return RandomUniform(std::move(shape), lo, hi, rng);
}

std::vector<Parameter*> Pointers(const ParamList& list) {
  std::vector<Parameter*> out;
  for (const auto& [name, p] : list.params) out.push_back(p);
  return out;
}

Parameter Leaf(const std::string& name, Tensor t) {
  Parameter p;
  p.name = name;
  p.value = std::move(t);
  return p;
}

// Gives every batch-norm gain a non-trivial value so that no branch starts
// switched off.
void PerturbGains(ParamList& list, Rng& rng) {
  for (auto& [name, p] : list.params) {
    if (name.size() > 6 && name.compare(name.size() - 6, 6, ".gamma") == 0) {
      p->value = Uniform(p->value.shape(), rng, 0.5, 1.5);
    }
  }
}

struct Case {
  double tolerance;
  std::function<std::vector<GradCheckEntry>(uint64_t)> run;
};

// Multiples of 1/64 in [-1, 1]: with a power-of-two step every perturbed
// forward pass of a linear layer is computed without rounding.
Tensor Dyadic(Shape shape, Rng& rng) {
  Tensor t = Uniform(std::move(shape), rng);
  for (double& v : t.data()) v = std::round(v * 64.0) / 64.0;
  return t;
}

std::vector<GradCheckEntry> Linear(uint64_t seed) {
  Rng rng(seed);
  LinearLayer layer(3, 4, rng);
  layer.weight.value = Dyadic(layer.weight.value.shape(), rng);
  layer.bias.value = Dyadic({4}, rng);
  Parameter x = Leaf("x", Dyadic({5, 3}, rng));
  ParamList list;
  layer.Register(list, "linear");
  auto params = Pointers(list);
  params.push_back(&x);
  const Tensor w = Dyadic({5, 4}, rng);
  GradCheckOptions opt;
  opt.step = std::ldexp(1.0, -17);
  return CheckGradients(
      [&](Tape& tape) {
        ForwardContext ctx{tape};
        return ops::Sum(ops::Mul(layer.Forward(ctx, tape.Param(x)), tape.Constant(w)));
      },
      params, opt);
}

FrontendConfig Reduced() {
  FrontendConfig c;
  c.channels = {2, 2, 3, 3};
  return c;
}

std::vector<GradCheckEntry> AudioFront(uint64_t seed) {
  Rng rng(seed);
  AudioFrontend front(Reduced(), rng);
  ParamList list;
  front.Register(list, "audio_frontend");
  PerturbGains(list, rng);
  Parameter x = Leaf("samples", Uniform({1280}, rng));
  auto params = Pointers(list);
  params.push_back(&x);
  Rng wrng(seed + 1);
  const Tensor w = Uniform({2, Reduced().feature_dim()}, wrng);
  GradCheckOptions opt;
  opt.max_entries = 12;
  opt.seed = seed;
  opt.skip_kinks = true;
  return CheckGradients(
      [&](Tape& tape) {
        Frozen f(tape);
        return ops::Sum(ops::Mul(front.Forward(f.ctx, tape.Param(x)), tape.Constant(w)));
      },
      params, opt);
}

std::vector<GradCheckEntry> VisualFront(uint64_t seed) {
  Rng rng(seed);
  VisualFrontend front(Reduced(), rng);
  ParamList list;
  front.Register(list, "visual_frontend");
  PerturbGains(list, rng);
  Parameter x = Leaf("frames", Uniform({3, 16, 16}, rng));
  auto params = Pointers(list);
  params.push_back(&x);
  Rng wrng(seed + 1);
  const Tensor w = Uniform({3, Reduced().feature_dim()}, wrng);
  GradCheckOptions opt;
  opt.max_entries = 12;
  opt.seed = seed;
  opt.skip_kinks = true;
  return CheckGradients(
      [&](Tape& tape) {
        Frozen f(tape);
        return ops::Sum(ops::Mul(front.Forward(f.ctx, tape.Param(x)), tape.Constant(w)));
      },
      params, opt);
}

GradCheckOptions KinkAware() {
  GradCheckOptions opt;
  opt.skip_kinks = true;
  return opt;
}

ConformerConfig SmallEncoder() {
  ConformerConfig c;
  c.num_blocks = 1;
  c.d_k = c.d_v = 8;
  c.d_ff = 16;
  c.n_head = 2;
  c.depthwise_kernel = 5;
  return c;
}

std::vector<GradCheckEntry> ConformerBlockCase(uint64_t seed) {
  Rng rng(seed);
  ConformerBlock block(SmallEncoder(), rng);
  ParamList list;
  block.Register(list, "block");
  PerturbGains(list, rng);
  Parameter x = Leaf("x", Uniform({6, 8}, rng));
  auto params = Pointers(list);
  params.push_back(&x);
  Rng wrng(seed + 1);
  const Tensor w = Uniform({6, 8}, wrng);
  return CheckGradients(
      [&](Tape& tape) {
        Frozen f(tape);
        return ops::Sum(ops::Mul(block.Forward(f.ctx, tape.Param(x)), tape.Constant(w)));
      },
      params, KinkAware());
}

std::vector<GradCheckEntry> Fusion(uint64_t seed) {
  Rng rng(seed);
  FusionMlp mlp(4, rng);
  ParamList list;
  mlp.Register(list, "fusion");
  PerturbGains(list, rng);
  Parameter a = Leaf("audio", Uniform({5, 4}, rng)), v = Leaf("visual", Uniform({5, 4}, rng));
  auto params = Pointers(list);
  params.push_back(&a);
  params.push_back(&v);
  Rng wrng(seed + 1);
  const Tensor w = Uniform({5, 4}, wrng);
  return CheckGradients(
      [&](Tape& tape) {
        Frozen f(tape);
        return ops::Sum(ops::Mul(mlp.Forward(f.ctx, tape.Param(a), tape.Param(v)),
                                 tape.Constant(w)));
      },
      params, KinkAware());
}

std::vector<GradCheckEntry> DecoderBlockCase(uint64_t seed) {
  Rng rng(seed);
  DecoderConfig cfg;
  cfg.num_blocks = 1;
  cfg.d_model = 8;
  cfg.n_head = 2;
  cfg.d_ff = 16;
  DecoderBlock block(cfg, rng);
  ParamList list;
  block.Register(list, "decoder_block");
  Parameter x = Leaf("x", Uniform({4, 8}, rng)), mem = Leaf("memory", Uniform({6, 8}, rng));
  auto params = Pointers(list);
  params.push_back(&x);
  params.push_back(&mem);
  Rng wrng(seed + 1);
  const Tensor w = Uniform({4, 8}, wrng);
  return CheckGradients(
      [&](Tape& tape) {
        Frozen f(tape);
        return ops::Sum(ops::Mul(block.Forward(f.ctx, tape.Param(x), tape.Param(mem)),
                                 tape.Constant(w)));
      },
      params, KinkAware());
}

std::vector<GradCheckEntry> Ctc(uint64_t seed) {
  Rng rng(seed);
  Parameter x = Leaf("logits", Uniform({7, 4}, rng, -2, 2));
  const std::vector<int> target = {1, 2, 2, 3};
  return CheckGradients(
      [&](Tape& tape) {
        return CtcLogLikelihood(ops::LogSoftmax(tape.Param(x), 1), target);
      },
      {&x});
}

std::vector<GradCheckEntry> Ce(uint64_t seed) {
  Rng rng(seed);
  Parameter x = Leaf("logits", Uniform({4, 6}, rng, -2, 2));
  const std::vector<int> target = {1, 4, 2, 5};
  return CheckGradients(
      [&](Tape& tape) {
        return AttentionCrossEntropy(tape.Param(x), target, 0.1, Reduction::kMean);
      },
      {&x});
}

std::vector<GradCheckEntry> Hybrid(uint64_t seed) {
  Rng rng(seed);
  Parameter ctc = Leaf("ctc_logits", Uniform({6, 4}, rng, -2, 2));
  Parameter att = Leaf("att_logits", Uniform({3, 7}, rng, -2, 2));
  return CheckGradients(
      [&](Tape& tape) {
        Var c = CtcLogLikelihood(ops::LogSoftmax(tape.Param(ctc), 1), {1, 3});
        Var e = ops::Neg(AttentionCrossEntropy(tape.Param(att), {1, 3, 6}, 0.1, Reduction::kSum));
        return HybridLoss(c, e, 0.3);
      },
      {&ctc, &att});
}

std::vector<GradCheckEntry> AvModel(uint64_t seed) {
  ModelConfig cfg;
  cfg.modality = Modality::kAudioVisual;
  cfg.alphabet = "abcde";
  cfg.seed = seed;
  AvsrModel model(cfg);
  Rng rng(seed + 1);
  PerturbGains(model.params(), rng);
  // Two clips of different lengths share batch-norm statistics.
  std::vector<Sample> batch(2);
  for (size_t i = 0; i < batch.size(); ++i) {
    const int64_t T = 8 - 2 * static_cast<int64_t>(i);
    batch[i].id = StrCat("gradcheck", i);
    batch[i].audio = RandomNormal({T * 640}, 1.0, rng);
    batch[i].frames = RandomNormal({T, 32, 32}, 1.0, rng);
  }
  batch[0].target = {1, 3, 2};
  batch[1].target = {4, 4};
  GradCheckOptions opt;
  opt.max_entries = 2;
  opt.seed = seed;
  opt.skip_kinks = true;
  return CheckGradients(
      [&](Tape& tape) {
        Frozen f(tape);
        const auto losses = model.LossBatch(f.ctx, {&batch[0], &batch[1]}, 0.3);
        return ops::Add(losses[0].loss, losses[1].loss);
      },
      Pointers(model.params()), opt);
}

const std::map<std::string, Case>& Cases() {
  static const std::map<std::string, Case> cases = {
      {"linear", {1e-9, Linear}},
      {"audio_frontend", {1e-4, AudioFront}},
      {"visual_frontend", {1e-4, VisualFront}},
      {"conformer_block", {1e-4, ConformerBlockCase}},
      {"fusion", {1e-6, Fusion}},
      {"decoder_block", {1e-4, DecoderBlockCase}},
      {"ctc", {1e-5, Ctc}},
      {"ce", {1e-4, Ce}},
      {"hybrid", {1e-4, Hybrid}},
      {"av_model", {1e-4, AvModel}},
  };
  return cases;
}

}  // namespace

std::vector<std::string> GradCheckModules() {
  return {"linear", "audio_frontend", "visual_frontend", "conformer_block", "fusion",
          "decoder_block", "ctc", "ce", "hybrid", "av_model"};
}

GradCheckReport RunGradCheck(const std::string& module, uint64_t seed) {
  auto it = Cases().find(module);
  if (it == Cases().end()) {
    std::string names;
    for (const auto& m : GradCheckModules()) names += (names.empty() ? "" : ", ") + m;
    throw ConfigError(StrCat("unknown gradient-check module '", module, "' (known: ", names, ")"));
  }
  GradCheckReport r;
  r.module = module;
  r.tolerance = it->second.tolerance;
  r.entries = it->second.run(seed);
  r.max_rel_error = MaxRelError(r.entries);
  for (const auto& e : r.entries) {
    if (e.entries == 0 || !(e.max_rel_error <= r.tolerance)) r.offenders.push_back(e.name);
  }
  r.passed = r.offenders.empty();
  return r;
}

}  // namespace avsr
