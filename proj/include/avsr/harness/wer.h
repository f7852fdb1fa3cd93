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
#ifndef AVSR_HARNESS_WER_H_
#define AVSR_HARNESS_WER_H_

#include <cstdint>
#include <string>
#include <vector>

namespace avsr {

struct EditCounts {
  int64_t substitutions = 0;
  int64_t deletions = 0;
  int64_t insertions = 0;
  int64_t errors() const { return substitutions + deletions + insertions; }
};

// Minimum edit distance between token sequences; among minimal alignments
// the one with most substitutions is reported.
EditCounts Align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

enum class ErrorUnit { kWord, kCharacter };

// Whitespace-separated words, or every non-space character.
std::vector<std::string> Tokenize(const std::string& text, ErrorUnit unit);

struct WerResult {
  EditCounts counts;
  int64_t reference_tokens = 0;
  int64_t excluded = 0;  // pairs dropped for an empty reference
  double rate() const {
    return reference_tokens == 0 ? 0.0
                                 : static_cast<double>(counts.errors()) / reference_tokens;
  }
};

// Corpus-level (S + D + I) / N. ContractError for unequal counts or when
// every reference is empty.
WerResult EvaluateWer(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                      ErrorUnit unit = ErrorUnit::kWord);

}  // namespace avsr

#endif  // AVSR_HARNESS_WER_H_
