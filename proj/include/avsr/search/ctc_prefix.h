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

#ifndef AVSR_SEARCH_CTC_PREFIX_H_
#define AVSR_SEARCH_CTC_PREFIX_H_

#include <vector>

#include "avsr/numerics/tensor.h"

namespace avsr {

// Per-frame log probabilities that the lattice prefix 0..t has emitted the
// prefix and currently ends in a non-blank (r_nb) or blank (r_b) frame.
struct CtcPrefixState {
  std::vector<double> r_nb;
  std::vector<double> r_b;
  int last = -1;        // last emitted label, -1 for the empty prefix
  double score = 0.0;   // log prefix probability psi
};

// Incremental CTC prefix probabilities over a fixed [T, C] log-posterior
// lattice (column 0 is the blank). psi(h) is the log probability of all
// label sequences that begin with h; the stop case yields log p(h).
class CtcPrefixScorer {
 public:
  explicit CtcPrefixScorer(Tensor log_probs);

  int64_t num_frames() const { return lattice_.dim(0); }
  CtcPrefixState Initial() const;
  // State of prefix + label (label in 1..C-1).
  CtcPrefixState Extend(const CtcPrefixState& prefix, int label) const;
  // log p(prefix) as a complete label sequence.
  double Stop(const CtcPrefixState& prefix) const;

 private:
  Tensor lattice_;
};

}  // namespace avsr

#endif  // AVSR_SEARCH_CTC_PREFIX_H_
