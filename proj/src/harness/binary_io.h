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

// Little-endian framing shared by checkpoint and language-model files.

#ifndef AVSR_HARNESS_BINARY_IO_H_
#define AVSR_HARNESS_BINARY_IO_H_

#include <cstdint>
#include <cstring>
#include <string>

#include "avsr/numerics/tensor.h"

namespace avsr {

class Writer {
 public:
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void F64(double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    U64(bits);
  }
  void Str(const std::string& s) {
    U64(s.size());
    out_ += s;
  }
  void Array(const std::string& name, const Tensor& t) {
    Str(name);
    U64(t.dtype() == DType::kFloat32 ? 32 : 64);
    U64(static_cast<uint64_t>(t.rank()));
    for (int64_t d : t.shape()) U64(static_cast<uint64_t>(d));
    for (double v : t.data()) F64(v);
  }
  const std::string& bytes() const { return out_; }
  void Raw(const char* p, size_t n) { out_.append(p, n); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string path) : in_(std::move(bytes)), path_(std::move(path)) {}
  uint64_t U64() {
    Need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in_[at_ + i]);
    at_ += 8;
    return v;
  }
  double F64() {
    const uint64_t bits = U64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string Str() {
    const uint64_t n = U64();
    Need(n);
    std::string s = in_.substr(at_, n);
    at_ += n;
    return s;
  }
  std::string Raw(size_t n) {
    Need(n);
    std::string s = in_.substr(at_, n);
    at_ += n;
    return s;
  }
  // Reads an array named 'expected' into dst, which must already have the
  // stored shape.
  void Array(const std::string& expected, Tensor& dst) {
    const std::string name = Str();
    if (name != expected) Fail(StrCat("expected array '", expected, "', found '", name, "'"));
    const uint64_t bits = U64();
    const uint64_t rank = U64();
    if (rank > 8) Fail(StrCat("array '", name, "' has implausible rank ", rank));
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int64_t>(U64());
    if (shape != dst.shape()) {
      throw ConfigError(StrCat(path_, ": array '", name, "' has shape ", ShapeString(shape),
                               ", model expects ", ShapeString(dst.shape())));
    }
    Tensor t(shape, bits == 32 ? DType::kFloat32 : DType::kFloat64);
    for (double& v : t.data()) v = F64();
    dst = std::move(t);
  }
  bool done() const { return at_ == in_.size(); }
  [[noreturn]] void Fail(const std::string& what) const {
    throw IoError(StrCat(path_, ": ", what));
  }

 private:
  void Need(uint64_t n) const {
    if (n > in_.size() - at_) Fail("truncated file");
  }
  std::string in_;
  std::string path_;
  size_t at_ = 0;
};

}  // namespace avsr

#endif  // AVSR_HARNESS_BINARY_IO_H_
