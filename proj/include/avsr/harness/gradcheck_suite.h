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
// Finite-difference checks of every differentiable module at small sizes, in
// float64 with dropout disabled and batch-norm statistics left untouched.

#ifndef AVSR_HARNESS_GRADCHECK_SUITE_H_
#define AVSR_HARNESS_GRADCHECK_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avsr/numerics/gradcheck.h"

namespace avsr {

struct GradCheckReport {
  std::string module;
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
  std::vector<std::string> offenders;  // parameter groups over tolerance
};

// linear, audio_frontend, visual_frontend, conformer_block, fusion,
// decoder_block, ctc, ce, hybrid, av_model.
std::vector<std::string> GradCheckModules();

// ConfigError for an unknown module name.
GradCheckReport RunGradCheck(const std::string& module, uint64_t seed);

}  // namespace avsr

#endif  // AVSR_HARNESS_GRADCHECK_SUITE_H_
