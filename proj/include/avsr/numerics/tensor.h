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

#ifndef AVSR_NUMERICS_TENSOR_H_
#define AVSR_NUMERICS_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "avsr/common/errors.h"

namespace avsr {

using Shape = std::vector<int64_t>;

// float32 tensors keep a double buffer whose values are always representable
// in single precision; every op rounds its output when the result dtype is
// float32.
enum class DType { kFloat32, kFloat64 };

std::string ShapeString(const Shape& shape);
int64_t NumElements(const Shape& shape);
const char* DTypeName(DType dtype);
DType PromoteTypes(DType a, DType b);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, DType dtype = DType::kFloat64);
  Tensor(Shape shape, std::vector<double> data,
         DType dtype = DType::kFloat64);

  static Tensor Zeros(Shape shape, DType dtype = DType::kFloat64) {
    return Tensor(std::move(shape), dtype);
  }
  static Tensor Full(Shape shape, double value,
                     DType dtype = DType::kFloat64);
  static Tensor Scalar(double value, DType dtype = DType::kFloat64) {
    return Tensor({1}, {value}, dtype);
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int axis) const;
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }
  DType dtype() const { return dtype_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Row-major multi-index access; bounds are checked.
  double at(std::initializer_list<int64_t> index) const;
  double& at(std::initializer_list<int64_t> index);

  double item() const;

  // Same data viewed under another shape with equal element count.
  Tensor Reshaped(Shape shape) const;
  Tensor Cast(DType dtype) const;
  void RoundToDType();
  void Fill(double value);

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  int64_t Offset(std::initializer_list<int64_t> index) const;

  Shape shape_;
  DType dtype_ = DType::kFloat64;
  std::vector<double> data_;
};

// Validates rank >= 1 and all extents >= 1.
void CheckShape(const Shape& shape);

double MaxAbsDiff(const Tensor& a, const Tensor& b);
bool AllFinite(const Tensor& t);

}  // namespace avsr

#endif  // AVSR_NUMERICS_TENSOR_H_
