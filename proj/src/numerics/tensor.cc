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

#include "avsr/numerics/tensor.h"

#include <cmath>
#include <sstream>

namespace avsr {

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

const char* DTypeName(DType dtype) {
  return dtype == DType::kFloat32 ? "float32" : "float64";
}

DType PromoteTypes(DType a, DType b) {
  return (a == DType::kFloat64 || b == DType::kFloat64) ? DType::kFloat64
                                                        : DType::kFloat32;
}

void CheckShape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
  for (int64_t d : shape) {
    if (d < 1) {
      throw ShapeError(StrCat("tensor extents must be >= 1, got ",
                              ShapeString(shape)));
    }
  }
}

Tensor::Tensor(Shape shape, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype) {
  CheckShape(shape_);
  data_.assign(static_cast<size_t>(NumElements(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype), data_(std::move(data)) {
  CheckShape(shape_);
  if (static_cast<int64_t>(data_.size()) != NumElements(shape_)) {
    throw ShapeError(StrCat("data length ", data_.size(),
                            " does not match shape ", ShapeString(shape_)));
  }
  RoundToDType();
}

Tensor Tensor::Full(Shape shape, double value, DType dtype) {
  Tensor t(std::move(shape), dtype);
  t.Fill(value);
  return t;
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ShapeError(StrCat("axis ", axis, " out of range for shape ",
                            ShapeString(shape_)));
  }
  return shape_[static_cast<size_t>(axis)];
}

int64_t Tensor::Offset(std::initializer_list<int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError(StrCat("index rank ", index.size(), " vs tensor shape ",
                            ShapeString(shape_)));
  }
  int64_t offset = 0;
  size_t axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= shape_[axis]) {
      throw ShapeError(StrCat("index ", i, " out of range on axis ", axis,
                              " of ", ShapeString(shape_)));
    }
    offset = offset * shape_[axis] + i;
    ++axis;
  }
  return offset;
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  return data_[static_cast<size_t>(Offset(index))];
}

double& Tensor::at(std::initializer_list<int64_t> index) {
  return data_[static_cast<size_t>(Offset(index))];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError(StrCat("item() on non-scalar tensor ",
                            ShapeString(shape_)));
  }
  return data_[0];
}

Tensor Tensor::Reshaped(Shape shape) const {
  CheckShape(shape);
  if (NumElements(shape) != size()) {
    throw ShapeError(StrCat("cannot reshape ", ShapeString(shape_), " to ",
                            ShapeString(shape)));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.dtype_ = dtype_;
  out.data_ = data_;
  return out;
}

Tensor Tensor::Cast(DType dtype) const {
  Tensor out = *this;
  out.dtype_ = dtype;
  out.RoundToDType();
  return out;
}

void Tensor::RoundToDType() {
  if (dtype_ != DType::kFloat32) return;
  for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
}

void Tensor::Fill(double value) {
  for (double& v : data_) v = value;
  RoundToDType();
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (!a.SameShape(b)) {
    throw ShapeError(StrCat("MaxAbsDiff shape mismatch ",
                            ShapeString(a.shape()), " vs ",
                            ShapeString(b.shape())));
  }
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a[i] - b[i]));
  }
  return m;
}

bool AllFinite(const Tensor& t) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace avsr
