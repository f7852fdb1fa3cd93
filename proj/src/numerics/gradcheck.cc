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

#include "avsr/numerics/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "avsr/numerics/ops.h"

namespace avsr {
namespace {

double Evaluate(const LossFn& loss, uint64_t* signature = nullptr) {
  Tape tape(/*grad_enabled=*/false);
  if (signature == nullptr) return loss(tape).value().item();
  ops::KinkRecorder recorder;
  const double v = loss(tape).value().item();
  *signature = recorder.signature();
  return v;
}

// With kink detection the step shrinks tenfold, at most twice, until neither
// evaluation changes a branch; false if it never gets there.
bool CentralDifference(const LossFn& loss, Parameter& p, int64_t i,
                       const GradCheckOptions& options, uint64_t base, double* numeric) {
  const double orig = p.value[i];
  double h = options.step;
  for (int attempt = 0; attempt < (options.skip_kinks ? 3 : 1); ++attempt, h /= 10.0) {
    uint64_t sig_up = base, sig_down = base;
    p.value[i] = orig + h;
    const double up = Evaluate(loss, options.skip_kinks ? &sig_up : nullptr);
    p.value[i] = orig - h;
    const double down = Evaluate(loss, options.skip_kinks ? &sig_down : nullptr);
    p.value[i] = orig;
    if (sig_up == base && sig_down == base) {
      *numeric = (up - down) / (2.0 * h);
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<GradCheckEntry> CheckGradients(const LossFn& loss,
                                           const std::vector<Parameter*>& params,
                                           const GradCheckOptions& options) {
  for (Parameter* p : params) {
    if (p->value.dtype() != DType::kFloat64) {
      throw ContractError(StrCat("gradient check of '", p->name,
                                 "' requires float64 parameters"));
    }
  }
  std::vector<Tensor> analytic;
  {
    Tape tape;
    Var l = loss(tape);
    tape.Backward(l);
    for (Parameter* p : params) analytic.push_back(tape.ParamGrad(*p));
  }
  uint64_t base = 0;
  if (options.skip_kinks) Evaluate(loss, &base);
  std::mt19937_64 rng(options.seed);
  std::vector<GradCheckEntry> report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    std::vector<int64_t> idx(static_cast<size_t>(p.value.size()));
    std::iota(idx.begin(), idx.end(), 0);
    const bool sampled = options.max_entries > 0 &&
                         static_cast<int64_t>(idx.size()) > options.max_entries;
    if (sampled) std::shuffle(idx.begin(), idx.end(), rng);
    GradCheckEntry entry;
    entry.name = p.name;
    for (int64_t i : idx) {
      if (sampled && entry.entries == options.max_entries) break;
      double numeric = 0.0;
      if (!CentralDifference(loss, p, i, options, base, &numeric)) {
        ++entry.kinked;
        continue;
      }
      const double a = analytic[pi][i];
      const double abs_err = std::fabs(a - numeric);
      const double denom = std::max({std::fabs(a), std::fabs(numeric),
                                     options.denominator_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
      ++entry.entries;
    }
    report.push_back(entry);
  }
  return report;
}

double MaxRelError(const std::vector<GradCheckEntry>& entries) {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

}  // namespace avsr
