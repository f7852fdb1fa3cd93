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
#include "avsr/harness/optim.h"

#include <algorithm>
#include <cmath>

namespace avsr {

double NoamLr(int64_t step, int64_t warmup, double peak) {
  if (step < 1) throw ContractError(StrCat("learning-rate step must be >= 1, got ", step));
  if (warmup < 1) throw ContractError(StrCat("warmup must be >= 1, got ", warmup));
  const double s = static_cast<double>(step), w = static_cast<double>(warmup);
  return peak * std::min(s / w, std::sqrt(w / s));
}

void AdamConfig::Validate() const {
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0)) throw ConfigError("Adam epsilon must be positive");
}

Adam::Adam(const ParamList& params, const AdamConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  for (const auto& [name, p] : params.params) {
    params_.push_back(p);
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

double Adam::Step(const std::vector<Tensor>& grads, double lr) {
  if (grads.size() != params_.size()) {
    throw ShapeError(StrCat("Adam got ", grads.size(), " gradients for ", params_.size(),
                            " parameters"));
  }
  double sq = 0.0;
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].SameShape(params_[i]->value)) {
      throw ShapeError(StrCat("gradient of '", params_[i]->name, "' has shape ",
                              ShapeString(grads[i].shape()), ", parameter ",
                              ShapeString(params_[i]->value.shape())));
    }
    if (!AllFinite(grads[i])) {
      throw NumericError(StrCat("non-finite gradient for parameter '", params_[i]->name, "'"));
    }
    for (double g : grads[i].data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double scale =
      (cfg_.clip_norm > 0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& w = params_[i]->value;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    const Tensor& g = grads[i];
    for (int64_t j = 0; j < w.size(); ++j) {
      const double gj = g[j] * scale;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
    }
    w.RoundToDType();
  }
  return norm;
}

}  // namespace avsr
