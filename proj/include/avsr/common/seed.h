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
#ifndef AVSR_COMMON_SEED_H_
#define AVSR_COMMON_SEED_H_

#include <cstdint>
#include <string_view>

namespace avsr {

// Stable 64-bit mix of a global seed and a key (FNV-1a followed by a
// splitmix finalizer), so per-item randomness does not depend on the order
// in which items are processed.
inline uint64_t DeriveSeed(uint64_t seed, std::string_view key) {
  uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

}  // namespace avsr

#endif  // AVSR_COMMON_SEED_H_
