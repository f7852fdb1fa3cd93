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
#include "avsr/harness/train.h"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <sstream>

#include "avsr/common/seed.h"
#include "avsr/harness/checkpoint.h"
#include "avsr/objectives/losses.h"

namespace avsr {
namespace {

double CpuSeconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

struct Snapshot {
  std::vector<Tensor> params, buffers;
  void Take(const ParamList& list) {
    params.clear();
    buffers.clear();
    for (const auto& [n, p] : list.params) params.push_back(p->value);
    for (const auto& [n, t] : list.buffers) buffers.push_back(*t);
  }
  void Restore(ParamList& list) const {
    for (size_t i = 0; i < params.size(); ++i) list.params[i].second->value = params[i];
    for (size_t i = 0; i < buffers.size(); ++i) *list.buffers[i].second = buffers[i];
  }
};

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (!(peak_lr > 0)) throw ConfigError("peak_lr must be positive");
  if (max_frames < 1) throw ConfigError("max_frames must be >= 1");
  HybridLossConfig{alpha}.Validate();
  adam.Validate();
}

RunConfig RunConfig::FromConfig(KeyValueConfig& kv) {
  RunConfig r;
  r.model = ModelConfig::FromConfig(kv);
  TrainConfig& t = r.train;
  t.batch_size = kv.GetInt("batch_size", t.batch_size);
  t.epochs = kv.GetInt("epochs", t.epochs);
  t.warmup_steps = kv.GetInt("warmup_steps", t.warmup_steps);
  t.peak_lr = kv.GetDouble("peak_lr", t.peak_lr);
  t.adam.beta1 = kv.GetDouble("adam_beta1", t.adam.beta1);
  t.adam.beta2 = kv.GetDouble("adam_beta2", t.adam.beta2);
  t.adam.eps = kv.GetDouble("adam_eps", t.adam.eps);
  t.adam.clip_norm = kv.GetDouble("clip_norm", t.adam.clip_norm);
  t.max_frames = kv.GetInt("max_frames", t.max_frames);
  t.alpha = kv.GetDouble("alpha", t.alpha);
  const std::string dtype = kv.GetString("dtype", "float32");
  if (dtype == "float32") {
    t.dtype = DType::kFloat32;
  } else if (dtype == "float64") {
    t.dtype = DType::kFloat64;
  } else {
    throw ConfigError(StrCat("dtype must be float32 or float64, got '", dtype, "'"));
  }
  t.seed = static_cast<uint64_t>(kv.GetInt("train_seed", static_cast<int64_t>(t.seed)));
  t.max_steps = kv.GetInt("max_steps", t.max_steps);
  t.max_cpu_seconds = kv.GetDouble("max_cpu_seconds", t.max_cpu_seconds);
  t.eval_every = kv.GetInt("eval_every", t.eval_every);
  t.eval_limit = kv.GetInt("eval_limit", t.eval_limit);
  const std::string unit = kv.GetString("wer_unit", "word");
  if (unit == "word") {
    t.wer_unit = ErrorUnit::kWord;
  } else if (unit == "char") {
    t.wer_unit = ErrorUnit::kCharacter;
  } else {
    throw ConfigError(StrCat("wer_unit must be word or char, got '", unit, "'"));
  }
  t.augment = kv.GetBool("augment", t.augment);
  t.restore_best = kv.GetBool("restore_best", t.restore_best);
  t.Validate();
  DecodeConfig& d = r.decode;
  d.beam = static_cast<int>(kv.GetInt("beam", d.beam));
  d.ctc_weight = kv.GetDouble("lambda", d.ctc_weight);
  d.lm_weight = kv.GetDouble("beta", d.lm_weight);
  d.max_len_ratio = kv.GetDouble("max_len_ratio", d.max_len_ratio);
  d.length_normalize = kv.GetBool("length_normalize", d.length_normalize);
  d.nbest = static_cast<int>(kv.GetInt("nbest", d.nbest));
  d.Validate();
  if (!kv.Has("crop")) kv.Set("crop", "32");
  r.augment = AugmentPolicy::FromConfig(kv);
  kv.CheckAllConsumed();
  return r;
}

RunConfig RunConfig::Load(const std::string& path) {
  KeyValueConfig kv = KeyValueConfig::Load(path);
  return FromConfig(kv);
}

std::string StepLog::ToLine() const {
  std::ostringstream os;
  os.precision(17);
  os << "step=" << step << " epoch=" << epoch << " lr=" << lr << " loss=" << loss
     << " ctc=" << ctc << " ce=" << ce << " grad_norm=" << grad_norm << " used=" << used
     << " skipped=" << skipped;
  if (!std::isnan(val_wer)) os << " val_wer=" << val_wer;
  return os.str();
}

Trainer::Trainer(AvsrModel& model, const TrainConfig& cfg, const Dataset& train,
                 const Dataset* val)
    : model_(model),
      cfg_(cfg),
      train_(train),
      val_(val),
      adam_((CastParameters(model.params(), cfg.dtype), model.params()), cfg.adam),
      dropout_rng_(DeriveSeed(cfg.seed, "dropout")) {
  cfg_.Validate();
  if (train_.size() == 0) {
    throw ConfigError("no training utterances left after length filtering");
  }
}

std::vector<size_t> Trainer::EpochOrder(int64_t epoch) const {
  std::vector<size_t> order(train_.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(DeriveSeed(cfg_.seed, StrCat("epoch/", epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

uint64_t Trainer::SampleSeed(int64_t epoch, size_t index) const {
  return DeriveSeed(cfg_.seed, StrCat("sample/", epoch, "/", train_.record(index).id));
}

StepLog Trainer::Step(const std::vector<size_t>& batch, int64_t epoch) {
  ParamList& list = model_.params();
  StepLog log;
  log.epoch = epoch;
  log.lr = NoamLr(adam_.step() + 1, cfg_.warmup_steps, cfg_.peak_lr);
  std::vector<Sample> samples;
  for (size_t idx : batch) {
    Sample s = train_.Load(idx, true, SampleSeed(epoch, idx));
    if (cfg_.alpha > 0.0 && CtcMinFrames(s.target) > s.num_frames()) {
      ++log.skipped;
      continue;
    }
    samples.push_back(std::move(s));
  }
  if (!samples.empty()) {
    std::vector<const Sample*> ptrs;
    for (const Sample& s : samples) ptrs.push_back(&s);
    Tape tape;
    std::vector<BatchNormUpdate> updates;
    ForwardContext ctx{tape, true, &dropout_rng_, &updates};
    const std::vector<LossBreakdown> lbs = model_.LossBatch(ctx, ptrs, cfg_.alpha);
    log.used = static_cast<int64_t>(samples.size());
    const double inv = 1.0 / static_cast<double>(log.used);
    std::vector<Var> terms;
    for (size_t i = 0; i < lbs.size(); ++i) {
      const double w = inv / static_cast<double>(samples[i].target.size());
      terms.push_back(ops::Scale(lbs[i].loss, w));
      log.loss += lbs[i].loss.value().item() * w;
      log.ctc += cfg_.alpha > 0 ? -lbs[i].ctc_ll * w : 0.0;
      log.ce += lbs[i].ce * w;
    }
    Var total = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) total = ops::Add(total, terms[i]);
    tape.Backward(total);
    std::vector<Tensor> grads;
    for (const auto& [name, p] : list.params) {
      grads.push_back(tape.ParamUsed(*p) ? tape.ParamGrad(*p) : Tensor(p->value.shape()));
    }
    ApplyBatchNormUpdates(updates);
    log.grad_norm = adam_.Step(grads, log.lr);
  }
  log.step = adam_.step();
  return log;
}

double Trainer::Validate() {
  if (!val_ || val_->size() == 0) return std::numeric_limits<double>::quiet_NaN();
  DecodeConfig greedy;
  greedy.beam = 1;
  greedy.lm_weight = 0.0;
  if (cfg_.alpha == 0.0) greedy.ctc_weight = 0.0;
  return EvaluateModel(model_, *val_, greedy, nullptr, SearchKind::kGreedy, cfg_.wer_unit,
                       cfg_.eval_limit)
      .rate();
}

std::string Trainer::RngState() const {
  std::ostringstream os;
  os << dropout_rng_;
  return os.str();
}

TrainSummary Trainer::Run(std::ostream* log, const std::string& out_dir) {
  const double start = CpuSeconds();
  TrainSummary summary;
  Snapshot best;
  bool have_best = false;
  bool stop = false;
  const size_t bs = static_cast<size_t>(cfg_.batch_size);
  for (int64_t epoch = 1; epoch <= cfg_.epochs && !stop; ++epoch) {
    const std::vector<size_t> order = EpochOrder(epoch);
    for (size_t b = 0; b < order.size() && !stop; b += bs) {
      std::vector<size_t> batch(order.begin() + b, order.begin() + std::min(order.size(), b + bs));
      StepLog entry = Step(batch, epoch);
      summary.skipped += entry.skipped;
      summary.last_loss = entry.loss;
      stop = (cfg_.max_steps > 0 && entry.step >= cfg_.max_steps) ||
             (cfg_.max_cpu_seconds > 0 && CpuSeconds() - start >= cfg_.max_cpu_seconds);
      const bool epoch_end = b + bs >= order.size();
      const bool eval = val_ && val_->size() > 0 &&
                        (cfg_.eval_every > 0 ? entry.step % cfg_.eval_every == 0 || stop
                                             : epoch_end || stop);
      if (eval) {
        entry.val_wer = Validate();
        if (!have_best || entry.val_wer < summary.best_val_wer) {
          summary.best_val_wer = entry.val_wer;
          summary.best_step = entry.step;
          best.Take(model_.params());
          have_best = true;
          if (!out_dir.empty()) {
            SaveCheckpoint((std::filesystem::path(out_dir) / "best.ckpt").string(), model_,
                           {entry.step, RngState(), "", DataFingerprint(train_.options())}, &adam_);
          }
        }
      }
      if (log) *log << entry.ToLine() << '\n' << std::flush;
    }
  }
  summary.steps = adam_.step();
  if (!out_dir.empty()) {
    SaveCheckpoint((std::filesystem::path(out_dir) / "last.ckpt").string(), model_,
                   {summary.steps, RngState(), "", DataFingerprint(train_.options())}, &adam_);
  }
  if (have_best && cfg_.restore_best) best.Restore(model_.params());
  summary.cpu_seconds = CpuSeconds() - start;
  return summary;
}

WerResult EvaluateModel(AvsrModel& model, const Dataset& data, const DecodeConfig& cfg,
                        const LanguageModel* lm, SearchKind kind, ErrorUnit unit, int64_t limit,
                        std::vector<std::string>* hyps) {
  const size_t n = limit > 0 ? std::min<size_t>(data.size(), static_cast<size_t>(limit))
                             : data.size();
  std::vector<std::string> h, r;
  for (size_t i = 0; i < n; ++i) {
    const Sample s = data.Load(i, false, DeriveSeed(0, "eval/" + data.record(i).id));
    h.push_back(BestTranscript(Recognize(model, s, cfg, lm, kind), model.vocab()));
    r.push_back(data.record(i).transcript);
  }
  if (hyps) *hyps = h;
  return EvaluateWer(h, r, unit);
}

}  // namespace avsr
