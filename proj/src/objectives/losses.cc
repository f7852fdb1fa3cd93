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

#include "avsr/objectives/losses.h"

#include <cmath>
#include <limits>

#include "avsr/numerics/ops.h"

namespace avsr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

void CheckLattice(const Tensor& lp, const std::vector<int>& target) {
  if (lp.rank() != 2) {
    throw ShapeError(StrCat("CTC expects log posteriors [T, C], got ",
                            ShapeString(lp.shape())));
  }
  for (int id : target) {
    if (id <= 0 || id >= lp.dim(1)) {
      throw ContractError(StrCat("CTC target id ", id, " outside 1..", lp.dim(1) - 1));
    }
  }
}

}  // namespace

int64_t CtcMinFrames(const std::vector<int>& target) {
  int64_t n = static_cast<int64_t>(target.size());
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

Var CtcLogLikelihood(Var log_probs, const std::vector<int>& target, bool* feasible) {
  const Tensor& lp = log_probs.value();
  CheckLattice(lp, target);
  const int64_t T = lp.dim(0), C = lp.dim(1);
  const int64_t S = 2 * static_cast<int64_t>(target.size()) + 1;
  std::vector<int> ext(static_cast<size_t>(S), 0);
  for (size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto y = [&](int64_t t, int64_t s) { return lp[t * C + ext[s]]; };
  auto skip_ok = [&](int64_t s) { return s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2]; };

  std::vector<double> alpha(static_cast<size_t>(T * S), kNegInf);
  alpha[0] = y(0, 0);
  if (S > 1) alpha[1] = y(0, 1);
  for (int64_t t = 1; t < T; ++t) {
    for (int64_t s = 0; s < S; ++s) {
      double a = alpha[(t - 1) * S + s];
      if (s >= 1) a = LogAdd(a, alpha[(t - 1) * S + s - 1]);
      if (skip_ok(s)) a = LogAdd(a, alpha[(t - 1) * S + s - 2]);
      alpha[t * S + s] = a == kNegInf ? kNegInf : a + y(t, s);
    }
  }
  double ll = alpha[(T - 1) * S + S - 1];
  if (S > 1) ll = LogAdd(ll, alpha[(T - 1) * S + S - 2]);
  const bool ok = ll != kNegInf;
  if (feasible != nullptr) *feasible = ok;

  Tensor out({1}, {ll}, lp.dtype());
  Tape& tape = *log_probs.tape();
  if (!ok) {
    return tape.Record(std::move(out), {log_probs},
                       [](Tape&, const Tensor&, const Tensor&) {});
  }
  return tape.Record(
      std::move(out), {log_probs},
      [log_probs, ext, alpha, ll, T, S, C](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& lp = log_probs.value();
        auto y = [&](int64_t tt, int64_t s) { return lp[tt * C + ext[s]]; };
        std::vector<double> beta(static_cast<size_t>(T * S), kNegInf);
        beta[(T - 1) * S + S - 1] = y(T - 1, S - 1);
        if (S > 1) beta[(T - 1) * S + S - 2] = y(T - 1, S - 2);
        for (int64_t tt = T - 2; tt >= 0; --tt) {
          for (int64_t s = 0; s < S; ++s) {
            double b = beta[(tt + 1) * S + s];
            if (s + 1 < S) b = LogAdd(b, beta[(tt + 1) * S + s + 1]);
            if (s + 2 < S && ext[s + 2] != 0 && ext[s + 2] != ext[s]) {
              b = LogAdd(b, beta[(tt + 1) * S + s + 2]);
            }
            beta[tt * S + s] = b == kNegInf ? kNegInf : b + y(tt, s);
          }
        }
        // d ll / d log y_t(k) = sum over states labelled k of the occupancy
        // alpha * beta / (y * p).
        Tensor grad(lp.shape());
        for (int64_t tt = 0; tt < T; ++tt) {
          for (int64_t s = 0; s < S; ++s) {
            const double a = alpha[tt * S + s], b = beta[tt * S + s];
            if (a == kNegInf || b == kNegInf) continue;
            grad[tt * C + ext[s]] += std::exp(a + b - y(tt, s) - ll);
          }
        }
        t.Accumulate(log_probs, grad, g[0]);
      });
}

double CtcBruteForce(const Tensor& log_probs, const std::vector<int>& target) {
  CheckLattice(log_probs, target);
  const int64_t T = log_probs.dim(0), C = log_probs.dim(1);
  if (T > 8 || C > 6) {
    throw ShapeError(StrCat("brute-force CTC limited to T <= 8 and C <= 6, got T=",
                            T, " C=", C));
  }
  std::vector<int> label(static_cast<size_t>(T), 0);
  double total = kNegInf;
  std::vector<int> collapsed;
  while (true) {
    collapsed.clear();
    int prev = -1;
    double lp = 0.0;
    for (int64_t t = 0; t < T; ++t) {
      const int k = label[t];
      lp += log_probs[t * C + k];
      if (k != 0 && k != prev) collapsed.push_back(k);
      prev = k;
    }
    if (collapsed == target) total = LogAdd(total, lp);
    int64_t pos = T - 1;
    while (pos >= 0 && ++label[pos] == C) label[pos--] = 0;
    if (pos < 0) break;
  }
  return total;
}

Var AttentionCrossEntropy(Var logits, const std::vector<int>& target,
                          double smoothing, Reduction reduction) {
  if (logits.rank() != 2) {
    throw ShapeError(StrCat("cross-entropy expects logits [L, K], got ",
                            ShapeString(logits.shape())));
  }
  const int64_t L = logits.dim(0), K = logits.dim(1);
  if (static_cast<int64_t>(target.size()) != L) {
    throw ContractError(StrCat("cross-entropy has ", L, " logit rows for ",
                               target.size(), " targets"));
  }
  if (smoothing < 0.0 || smoothing >= 1.0) {
    throw ConfigError(StrCat("label smoothing ", smoothing, " outside [0, 1)"));
  }
  Tensor q({L, K}, logits.value().dtype());
  for (int64_t i = 0; i < L; ++i) {
    const int id = target[static_cast<size_t>(i)];
    if (id < 0 || id >= K) {
      throw ContractError(StrCat("target id ", id, " outside 0..", K - 1));
    }
    for (int64_t k = 0; k < K; ++k) q[i * K + k] = smoothing / static_cast<double>(K);
    q[i * K + id] += 1.0 - smoothing;
  }
  Tape& tape = *logits.tape();
  Var nll = ops::Neg(ops::Sum(ops::Mul(ops::LogSoftmax(logits, 1),
                                       tape.Constant(std::move(q)))));
  return reduction == Reduction::kMean ? ops::Scale(nll, 1.0 / static_cast<double>(L))
                                       : nll;
}

void HybridLossConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError(StrCat("CTC weight alpha=", alpha, " outside [0, 1]"));
  }
}

Var HybridLoss(Var ctc_ll, Var ce_ll, double alpha) {
  HybridLossConfig{alpha}.Validate();
  const double c = ctc_ll.value().item();
  if (alpha == 0.0) return ops::Neg(ce_ll);
  if (std::isinf(c) && c < 0) {
    throw InfeasibleSampleError("CTC log-likelihood is -inf for a positive CTC weight");
  }
  if (alpha == 1.0) return ops::Neg(ctc_ll);
  return ops::Neg(ops::Add(ops::Scale(ctc_ll, alpha), ops::Scale(ce_ll, 1.0 - alpha)));
}

}  // namespace avsr
