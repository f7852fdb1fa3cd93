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
#ifndef AVSR_HARNESS_TRAIN_H_
#define AVSR_HARNESS_TRAIN_H_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "avsr/common/keyvalue.h"
#include "avsr/dataflow/augment.h"
#include "avsr/harness/data.h"
#include "avsr/harness/model.h"
#include "avsr/harness/optim.h"
#include "avsr/harness/recognizer.h"
#include "avsr/harness/wer.h"
#include "avsr/search/beam_search.h"

namespace avsr {

struct TrainConfig {
  int64_t batch_size = 8;
  int64_t epochs = 20;
  int64_t warmup_steps = 400;
  double peak_lr = 4e-4;
  AdamConfig adam;
  int64_t max_frames = 600;
  double alpha = 0.3;
  DType dtype = DType::kFloat32;
  uint64_t seed = 0;
  // Stopping and evaluation.
  int64_t max_steps = 0;      // 0: no limit
  double max_cpu_seconds = 0; // 0: no limit
  int64_t eval_every = 0;     // steps between validations; 0: once per epoch
  int64_t eval_limit = 0;     // validation utterances used; 0: all
  ErrorUnit wer_unit = ErrorUnit::kWord;
  bool augment = false;
  bool restore_best = true;   // reload the best-validation weights at the end

  void Validate() const;
};

// Everything a config file may set. Keys:
//   model:  modality alphabet frontend_channels audio_kernel audio_stride
//           audio_pool encoder_blocks d_k d_v d_ff heads conv_kernel dropout
//           decoder_blocks label_smoothing seed
//   train:  batch_size epochs warmup_steps peak_lr adam_beta1 adam_beta2
//           adam_eps clip_norm max_frames alpha dtype max_steps
//           max_cpu_seconds eval_every eval_limit wer_unit augment
//           restore_best
//   decode: beam lambda beta max_len_ratio length_normalize nbest
//   augmentation: the AugmentPolicy field names
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
  AugmentPolicy augment;

  // Starts from the desk presets (crop 32) and rejects unknown keys.
  static RunConfig FromConfig(KeyValueConfig& cfg);
  static RunConfig Load(const std::string& path);
};

struct StepLog {
  int64_t step = 0;
  int64_t epoch = 0;
  double lr = 0.0;
  // Means over the batch of per-utterance terms divided by target length:
  // loss = alpha * ctc + (1 - alpha) * ce.
  double loss = 0.0;
  double ctc = 0.0;
  double ce = 0.0;
  double grad_norm = 0.0;
  int64_t used = 0;
  int64_t skipped = 0;  // infeasible CTC targets
  double val_wer = std::numeric_limits<double>::quiet_NaN();

  // "key=value" pairs separated by spaces; doubles at full precision.
  std::string ToLine() const;
};

struct TrainSummary {
  int64_t steps = 0;
  int64_t skipped = 0;
  double best_val_wer = std::numeric_limits<double>::quiet_NaN();
  int64_t best_step = 0;
  double cpu_seconds = 0.0;
  double last_loss = 0.0;
};

class Trainer {
 public:
  // Casts the model parameters to cfg.dtype.
  Trainer(AvsrModel& model, const TrainConfig& cfg, const Dataset& train,
          const Dataset* val = nullptr);

  // Utterance order of an epoch (a seeded shuffle).
  std::vector<size_t> EpochOrder(int64_t epoch) const;
  // Augmentation seed of one training utterance in one epoch.
  uint64_t SampleSeed(int64_t epoch, size_t index) const;
  // Forward, backward and one optimizer update over the given utterances.
  StepLog Step(const std::vector<size_t>& batch, int64_t epoch);
  // Greedy-decoding error rate of the validation set (lambda 0.1, or 0 when
  // the CTC head is not trained).
  double Validate();

  // Full schedule. Appends metric lines to log (if given) and writes
  // best.ckpt and last.ckpt under out_dir (if non-empty).
  TrainSummary Run(std::ostream* log = nullptr, const std::string& out_dir = "");

  Adam& optimizer() { return adam_; }
  int64_t step() const { return adam_.step(); }
  std::string RngState() const;

 private:
  AvsrModel& model_;
  TrainConfig cfg_;
  const Dataset& train_;
  const Dataset* val_;
  Adam adam_;
  Rng dropout_rng_;
};

// Error rate of model over a dataset with the given search.
WerResult EvaluateModel(AvsrModel& model, const Dataset& data, const DecodeConfig& cfg,
                        const LanguageModel* lm, SearchKind kind, ErrorUnit unit,
                        int64_t limit = 0, std::vector<std::string>* hyps = nullptr);

}  // namespace avsr

#endif  // AVSR_HARNESS_TRAIN_H_
