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

#ifndef AVSR_NUMERICS_GEMM_H_
#define AVSR_NUMERICS_GEMM_H_

#include <cstdint>

namespace avsr {

// Row-major C[m, n] (+)= op(A)[m, k] * op(B)[k, n]. A transposed operand is
// stored as its untransposed layout ([k, m] for A, [n, k] for B).
void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double* c, bool accumulate);

}  // namespace avsr

#endif  // AVSR_NUMERICS_GEMM_H_
