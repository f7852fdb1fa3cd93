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
#ifndef AVSR_HARNESS_OPTIM_H_
#define AVSR_HARNESS_OPTIM_H_

#include <cstdint>
#include <vector>

#include "avsr/numerics/nn.h"

namespace avsr {

// peak * min(step / warmup, sqrt(warmup / step)); ContractError for step < 1
// or warmup < 1.
double NoamLr(int64_t step, int64_t warmup, double peak);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double clip_norm = 5.0;  // global gradient norm bound; <= 0 disables
  void Validate() const;
};

// Bias-corrected Adam over a fixed parameter list. Moments are float64
// regardless of the parameter dtype; updated parameters are rounded back to
// their dtype.
class Adam {
 public:
  Adam(const ParamList& params, const AdamConfig& cfg);

  // Applies one update with learning rate lr. grads align with the parameter
  // list. Returns the global gradient norm before clipping. NumericError
  // naming the parameter if a gradient is not finite.
  double Step(const std::vector<Tensor>& grads, double lr);

  int64_t step() const { return step_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_step(int64_t s) { step_ = s; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  int64_t step_ = 0;
};

}  // namespace avsr

#endif  // AVSR_HARNESS_OPTIM_H_
