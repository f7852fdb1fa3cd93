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

#ifndef AVSR_COMMON_ERRORS_H_
#define AVSR_COMMON_ERRORS_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace avsr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible extents, ranks or axes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Violated preconditions of an operation (wrong token, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Inputs that carry no information (silent noise, constant waveform).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

namespace internal {

inline void StreamAll(std::ostringstream&) {}

template <typename T, typename... Rest>
void StreamAll(std::ostringstream& os, const T& first, const Rest&... rest) {
  os << first;
  StreamAll(os, rest...);
}

}  // namespace internal

template <typename... Args>
std::string StrCat(const Args&... args) {
  std::ostringstream os;
  internal::StreamAll(os, args...);
  return os.str();
}

}  // namespace avsr

#endif  // AVSR_COMMON_ERRORS_H_
