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

#ifndef BLOCKBERT_CORE_TENSOR_H_
#define BLOCKBERT_CORE_TENSOR_H_

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockbert/errors.h"
#include "blockbert/memory_tracker.h"

namespace blockbert {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);
std::size_t ShapeElements(const Shape& shape);

// Heap storage whose bytes are charged to the global MemoryTracker under the
// category active when the buffer is created.
template <typename T>
class TrackedBuffer {
 public:
  TrackedBuffer() = default;
  explicit TrackedBuffer(std::size_t size)
      : size_(size), category_(CurrentMemoryCategory()) {
    if (size_ == 0) return;
    MemoryTracker::Global().OnAllocate(bytes(), category_);
    data_.reset(new T[size_]());
  }
  TrackedBuffer(const TrackedBuffer& other) : TrackedBuffer(other.size_) {
    std::copy_n(other.data_.get(), size_, data_.get());
  }
  TrackedBuffer(TrackedBuffer&& other) noexcept
      : data_(std::move(other.data_)),
        size_(std::exchange(other.size_, 0)),
        category_(other.category_) {}
  TrackedBuffer& operator=(TrackedBuffer other) noexcept {
    swap(other);
    return *this;
  }
  ~TrackedBuffer() { Release(); }

  void swap(TrackedBuffer& other) noexcept {
    std::swap(data_, other.data_);
    std::swap(size_, other.size_);
    std::swap(category_, other.category_);
  }

  T* data() { return data_.get(); }
  const T* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  std::size_t bytes() const { return size_ * sizeof(T); }
  MemoryCategory category() const { return category_; }

 private:
  void Release() noexcept {
    if (data_) {
      MemoryTracker::Global().OnFree(bytes(), category_);
      data_.reset();
    }
    size_ = 0;
  }

  std::unique_ptr<T[]> data_;
  std::size_t size_ = 0;
  MemoryCategory category_ = MemoryCategory::kGeneral;
};

// Dense row-major array of rank 1 to 3. A default-constructed tensor is
// empty (rank 0) and only serves as a placeholder.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  // Zero-filled.
  explicit BasicTensor(Shape shape);
  BasicTensor(Shape shape, std::span<const T> values);
  BasicTensor(Shape shape, std::initializer_list<T> values)
      : BasicTensor(std::move(shape),
                    std::span<const T>(values.begin(), values.size())) {}

  static BasicTensor Zeros(Shape shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor Full(Shape shape, T value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return buffer_.size(); }
  bool empty() const { return buffer_.size() == 0; }
  // Rows and columns of a rank-2 tensor.
  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }
  // Size of the trailing axis; every leading axis is folded into rows.
  std::size_t inner() const { return shape_.empty() ? 0 : shape_.back(); }
  std::size_t outer() const { return inner() == 0 ? 0 : size() / inner(); }

  std::span<T> values() { return {buffer_.data(), buffer_.size()}; }
  std::span<const T> values() const { return {buffer_.data(), buffer_.size()}; }
  T* data() { return buffer_.data(); }
  const T* data() const { return buffer_.data(); }
  std::span<T> row(std::size_t r) { return values().subspan(r * inner(), inner()); }
  std::span<const T> row(std::size_t r) const {
    return values().subspan(r * inner(), inner());
  }

  T& operator[](std::size_t i) { return buffer_.data()[i]; }
  const T& operator[](std::size_t i) const { return buffer_.data()[i]; }
  T& operator()(std::size_t i, std::size_t j) {
    return buffer_.data()[i * shape_[1] + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const {
    return buffer_.data()[i * shape_[1] + j];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return buffer_.data()[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return buffer_.data()[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Same storage, new shape with the same element count.
  BasicTensor Reshaped(Shape shape) &&;
  BasicTensor Reshaped(Shape shape) const&;

  MemoryCategory category() const { return buffer_.category(); }
  std::size_t bytes() const { return buffer_.bytes(); }

  bool operator==(const BasicTensor& other) const {
    return shape_ == other.shape_ &&
           std::equal(values().begin(), values().end(), other.values().begin());
  }

 private:
  Shape shape_;
  TrackedBuffer<T> buffer_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

extern template class BasicTensor<double>;
extern template class BasicTensor<float>;

// Copies `count` consecutive rows starting at `begin` from a tensor viewed as
// outer() x inner().
template <typename T>
BasicTensor<T> SliceRows(const BasicTensor<T>& t, std::size_t begin,
                         std::size_t count);

// Writes `src` (count x inner) into rows [begin, begin + count) of `dst`.
template <typename T>
void AssignRows(BasicTensor<T>& dst, std::size_t begin,
                const BasicTensor<T>& src);

// Converts between precisions.
TensorF ToFloat(const Tensor& t);
Tensor ToDouble(const TensorF& t);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_TENSOR_H_
