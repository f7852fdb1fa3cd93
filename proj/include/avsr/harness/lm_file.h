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
#ifndef AVSR_HARNESS_LM_FILE_H_
#define AVSR_HARNESS_LM_FILE_H_

#include <memory>
#include <string>
#include <vector>

#include "avsr/harness/optim.h"
#include "avsr/search/language_model.h"

namespace avsr {

struct LmTrainConfig {
  TinyLmConfig model;
  int64_t steps = 2000;
  int64_t batch_size = 16;
  int64_t warmup_steps = 200;
  double peak_lr = 1e-3;
  uint64_t seed = 0;
};

// Trains on the given transcripts; returns the mean loss of the last 50 steps.
double TrainLanguageModel(TinyTransformerLM& lm, const std::vector<std::string>& texts,
                          const LmTrainConfig& cfg);

void SaveLanguageModel(const std::string& path, TinyTransformerLM& lm,
                       const TinyLmConfig& cfg);
std::unique_ptr<TinyTransformerLM> LoadLanguageModel(const std::string& path);

}  // namespace avsr

#endif  // AVSR_HARNESS_LM_FILE_H_
