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

#include "avsr/search/ctc_prefix.h"

#include <cmath>
#include <limits>

namespace avsr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace

CtcPrefixScorer::CtcPrefixScorer(Tensor log_probs) : lattice_(std::move(log_probs)) {
  if (lattice_.rank() != 2 || lattice_.dim(1) < 2) {
    throw ShapeError(StrCat("CTC prefix scoring expects [T, C>=2] log posteriors, got ",
                            ShapeString(lattice_.shape())));
  }
}

CtcPrefixState CtcPrefixScorer::Initial() const {
  const int64_t T = lattice_.dim(0), C = lattice_.dim(1);
  CtcPrefixState s;
  s.r_nb.assign(static_cast<size_t>(T), kNegInf);
  s.r_b.resize(static_cast<size_t>(T));
  double acc = 0.0;
  for (int64_t t = 0; t < T; ++t) {
    acc += lattice_[t * C];
    s.r_b[t] = acc;
  }
  return s;
}

CtcPrefixState CtcPrefixScorer::Extend(const CtcPrefixState& g, int label) const {
  const int64_t T = lattice_.dim(0), C = lattice_.dim(1);
  if (label < 1 || label >= C) {
    throw ContractError(StrCat("CTC prefix label ", label, " outside 1..", C - 1));
  }
  CtcPrefixState h;
  h.last = label;
  h.r_nb.assign(static_cast<size_t>(T), kNegInf);
  h.r_b.assign(static_cast<size_t>(T), kNegInf);
  // Mass of g that may be followed directly by `label` at the next frame.
  auto phi = [&](int64_t t) {
    return g.last == label ? g.r_b[t] : LogAdd(g.r_b[t], g.r_nb[t]);
  };
  double psi = kNegInf;
  if (g.last == -1) {
    h.r_nb[0] = lattice_[label];
    psi = h.r_nb[0];
  }
  for (int64_t t = 1; t < T; ++t) {
    const double yc = lattice_[t * C + label];
    const double p = phi(t - 1);
    h.r_nb[t] = LogAdd(h.r_nb[t - 1], p) + yc;
    h.r_b[t] = LogAdd(h.r_b[t - 1], h.r_nb[t - 1]) + lattice_[t * C];
    psi = LogAdd(psi, p + yc);
  }
  h.score = psi;
  return h;
}

double CtcPrefixScorer::Stop(const CtcPrefixState& prefix) const {
  const size_t last = prefix.r_b.size() - 1;
  return LogAdd(prefix.r_nb[last], prefix.r_b[last]);
}

}  // namespace avsr
