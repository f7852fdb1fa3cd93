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
#include "avsr/harness/wer.h"

#include <sstream>

#include "avsr/common/errors.h"

namespace avsr {

EditCounts Align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const size_t n = ref.size(), m = hyp.size();
  // cost[i][j] with ties broken towards more substitutions (fewer edits of
  // the other kinds).
  struct Cell {
    int64_t cost = 0, subs = 0, dels = 0, ins = 0;
  };
  auto better = [](const Cell& a, const Cell& b) {
    return a.cost != b.cost ? a.cost < b.cost : a.subs > b.subs;
  };
  std::vector<std::vector<Cell>> d(n + 1, std::vector<Cell>(m + 1));
  for (size_t i = 1; i <= n; ++i) d[i][0] = {static_cast<int64_t>(i), 0, static_cast<int64_t>(i), 0};
  for (size_t j = 1; j <= m; ++j) d[0][j] = {static_cast<int64_t>(j), 0, 0, static_cast<int64_t>(j)};
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      Cell diag = d[i - 1][j - 1];
      if (ref[i - 1] != hyp[j - 1]) {
        ++diag.cost;
        ++diag.subs;
      }
      Cell del = d[i - 1][j];
      ++del.cost;
      ++del.dels;
      Cell ins = d[i][j - 1];
      ++ins.cost;
      ++ins.ins;
      Cell best = diag;
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      d[i][j] = best;
    }
  }
  return {d[n][m].subs, d[n][m].dels, d[n][m].ins};
}

std::vector<std::string> Tokenize(const std::string& text, ErrorUnit unit) {
  std::vector<std::string> out;
  if (unit == ErrorUnit::kWord) {
    std::istringstream is(text);
    std::string w;
    while (is >> w) out.push_back(w);
  } else {
    for (char c : text) {
      if (!std::isspace(static_cast<unsigned char>(c))) out.emplace_back(1, c);
    }
  }
  return out;
}

WerResult EvaluateWer(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                      ErrorUnit unit) {
  if (hyps.size() != refs.size()) {
    throw ContractError(StrCat("WER needs equal counts: ", hyps.size(), " hypotheses, ",
                               refs.size(), " references"));
  }
  WerResult r;
  for (size_t i = 0; i < refs.size(); ++i) {
    const auto ref = Tokenize(refs[i], unit);
    if (ref.empty()) {
      ++r.excluded;
      continue;
    }
    const EditCounts c = Align(ref, Tokenize(hyps[i], unit));
    r.counts.substitutions += c.substitutions;
    r.counts.deletions += c.deletions;
    r.counts.insertions += c.insertions;
    r.reference_tokens += static_cast<int64_t>(ref.size());
  }
  if (r.reference_tokens == 0) throw ContractError("WER over empty references only");
  return r;
}

}  // namespace avsr
