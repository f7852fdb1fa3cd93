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

#ifndef AVSR_OBJECTIVES_LOSSES_H_
#define AVSR_OBJECTIVES_LOSSES_H_

#include <vector>

#include "avsr/numerics/tape.h"

namespace avsr {

// A CTC target that no alignment of the given frames can produce, met with a
// non-zero CTC weight. Training skips and counts such samples.
class InfeasibleSampleError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Frames needed to emit target: its length plus one blank between each pair
// of equal neighbours.
int64_t CtcMinFrames(const std::vector<int>& target);

// log p(target | lattice) summed over all blank-augmented alignments, with
// column 0 of log_probs [T, C] as the blank. Infeasible targets give -inf,
// a zero gradient and *feasible = false.
Var CtcLogLikelihood(Var log_probs, const std::vector<int>& target,
                     bool* feasible = nullptr);

// Enumerates all C^T frame labelings (T <= 8, C <= 6); ShapeError otherwise.
double CtcBruteForce(const Tensor& log_probs, const std::vector<int>& target);

enum class Reduction { kMean, kSum };

// Cross-entropy of logits [L, K] against target ids with label smoothing
// eps: q = (1 - eps) * onehot + eps / K. Returns the (positive) loss.
Var AttentionCrossEntropy(Var logits, const std::vector<int>& target,
                          double smoothing, Reduction reduction);

struct HybridLossConfig {
  double alpha = 0.3;
  void Validate() const;
};

// -(alpha * ctc_ll + (1 - alpha) * ce_ll). A -inf CTC term with alpha > 0
// throws InfeasibleSampleError; with alpha == 0 the CTC term is ignored.
Var HybridLoss(Var ctc_ll, Var ce_ll, double alpha);

}  // namespace avsr

#endif  // AVSR_OBJECTIVES_LOSSES_H_
