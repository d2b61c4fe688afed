/* Copyright 2026 The BlockBERT-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "blockbert/tensor.h"

#include <sstream>

namespace blockbert {
namespace {

void ValidateShape(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("tensor rank must be 1-3, got shape " +
                         ShapeToString(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got shape " +
                           ShapeToString(shape));
    }
  }
}

}  // namespace

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t ShapeElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape) : shape_(std::move(shape)) {
  ValidateShape(shape_);
  buffer_ = TrackedBuffer<T>(ShapeElements(shape_));
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::span<const T> values)
    : BasicTensor(std::move(shape)) {
  if (values.size() != size()) {
    throw DimensionError("shape " + ShapeToString(shape_) + " needs " +
                         std::to_string(size()) + " values, got " +
                         std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), buffer_.data());
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Full(Shape shape, T value) {
  BasicTensor t(std::move(shape));
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Reshaped(Shape shape) && {
  ValidateShape(shape);
  if (ShapeElements(shape) != size()) {
    throw DimensionError("cannot reshape " + ShapeToString(shape_) + " to " +
                         ShapeToString(shape));
  }
  BasicTensor out;
  out.shape_ = std::move(shape);
  out.buffer_ = std::move(buffer_);
  shape_.clear();
  return out;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Reshaped(Shape shape) const& {
  BasicTensor copy = *this;
  return std::move(copy).Reshaped(std::move(shape));
}

template class BasicTensor<double>;
template class BasicTensor<float>;

template <typename T>
BasicTensor<T> SliceRows(const BasicTensor<T>& t, std::size_t begin,
                         std::size_t count) {
  const std::size_t width = t.inner();
  if (begin + count > t.outer()) {
    throw DimensionError("row slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         ShapeToString(t.shape()));
  }
  BasicTensor<T> out({count, width});
  std::copy_n(t.data() + begin * width, count * width, out.data());
  return out;
}

template <typename T>
void AssignRows(BasicTensor<T>& dst, std::size_t begin,
                const BasicTensor<T>& src) {
  if (src.inner() != dst.inner() || begin + src.outer() > dst.outer()) {
    throw DimensionError("cannot assign " + ShapeToString(src.shape()) +
                         " into rows of " + ShapeToString(dst.shape()) +
                         " at row " + std::to_string(begin));
  }
  std::copy_n(src.data(), src.size(), dst.data() + begin * dst.inner());
}

template Tensor SliceRows(const Tensor&, std::size_t, std::size_t);
template TensorF SliceRows(const TensorF&, std::size_t, std::size_t);
template void AssignRows(Tensor&, std::size_t, const Tensor&);
template void AssignRows(TensorF&, std::size_t, const TensorF&);

TensorF ToFloat(const Tensor& t) {
  TensorF out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<float>(t[i]);
  return out;
}

Tensor ToDouble(const TensorF& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i];
  return out;
}

}  // namespace blockbert
