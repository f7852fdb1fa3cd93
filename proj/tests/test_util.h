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

#ifndef AVSR_TESTS_TEST_UTIL_H_
#define AVSR_TESTS_TEST_UTIL_H_

#include <string>
#include <utility>

#include "avsr/numerics/gradcheck.h"
#include "avsr/numerics/nn.h"

namespace avsr::testing {

inline Tensor Rand(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return RandomUniform(std::move(shape), lo, hi, rng);
}

inline Parameter MakeParam(const std::string& name, Tensor t) {
  Parameter p;
  p.name = name;
  p.value = std::move(t);
  return p;
}

// Weighted sum with fixed random weights.
inline Var Scalarize(Var y, uint64_t seed) {
  Tensor w = Rand(y.shape(), seed);
  return ops::Sum(ops::Mul(y, y.tape()->Constant(w)));
}

inline std::vector<Parameter*> Pointers(const ParamList& list) {
  std::vector<Parameter*> out;
  for (const auto& [name, p] : list.params) out.push_back(p);
  return out;
}

// Training-mode context whose batch-norm updates go to a discarded sink, so
// repeated evaluations see identical parameters and statistics.
struct FrozenTrainContext {
  std::vector<BatchNormUpdate> sink;
  ForwardContext ctx;
  explicit FrozenTrainContext(Tape& tape) : ctx{tape} {
    ctx.training = true;
    ctx.bn_updates = &sink;
    ctx.dropout_override = 0.0;
  }
};

}  // namespace avsr::testing

#endif  // AVSR_TESTS_TEST_UTIL_H_
