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

#ifndef AVSR_NUMERICS_GRADCHECK_H_
#define AVSR_NUMERICS_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avsr/numerics/tape.h"

namespace avsr {

struct GradCheckOptions {
  double step = 1e-5;
  // Entries checked per parameter, sampled without replacement; <= 0 checks
  // every entry.
  int64_t max_entries = 0;
  // Lower bound of the relative-error denominator max(|analytic|, |numeric|).
  double denominator_floor = 1e-3;
  uint64_t seed = 0;
  // An entry whose perturbation moves any ReLU or max-pool onto another
  // linear piece is retried at step / 10 and step / 100, then skipped, with
  // replacements drawn while max_entries allows.
  bool skip_kinks = false;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  int64_t entries = 0;
  int64_t kinked = 0;  // skipped by skip_kinks
};

// Builds a scalar loss on the given tape; must read the checked parameters
// through Tape::Param and be deterministic.
using LossFn = std::function<Var(Tape&)>;

// Compares analytic gradients against central differences
// (f(p + h) - f(p - h)) / 2h for every listed parameter.
std::vector<GradCheckEntry> CheckGradients(const LossFn& loss,
                                           const std::vector<Parameter*>& params,
                                           const GradCheckOptions& options = {});

double MaxRelError(const std::vector<GradCheckEntry>& entries);

}  // namespace avsr

#endif  // AVSR_NUMERICS_GRADCHECK_H_
