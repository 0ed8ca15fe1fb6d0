/* Copyright 2026 The nuclass Authors. All Rights Reserved.

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

#ifndef NUCLASS_TENSOR_HPP_
#define NUCLASS_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace nuclass {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return plane() * channels; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense channels x height x width array, row-major within each channel plane.
template <class Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, Real fill = Real(0)) : shape_(shape), data_(shape.size(), fill) {}
  BasicTensor(Shape shape, std::vector<Real> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) throw ShapeError("tensor data length does not match shape " + shape_.str());
  }

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real* channel(int c) { return data_.data() + shape_.plane() * c; }
  const Real* channel(int c) const { return data_.data() + shape_.plane() * c; }
  std::span<Real> plane_values(int c) { return {channel(c), shape_.plane()}; }
  std::span<const Real> plane_values(int c) const { return {channel(c), shape_.plane()}; }

  Real& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x]; }
  const Real& at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x]; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }
  bool operator==(const BasicTensor&) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

using Tensor = BasicTensor<float>;

// A decoded frame with values in [0,1], and a predicted/target residual in [-1,1].
// Both are plain tensors; the range contract is checked where it matters.
using FrameTensor = Tensor;
using ResidualTensor = Tensor;

void require_same_shape(const Shape& a, const Shape& b, const char* what);

// Throws ShapeError unless every element is finite and in [lo, hi].
void require_range(const Tensor& t, float lo, float hi, const char* what);

template <class To, class From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  BasicTensor<To> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return out;
}

// Channel-range view copied out as a new tensor.
template <class Real>
BasicTensor<Real> crop(const BasicTensor<Real>& t, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || y0 + height > t.height() || x0 + width > t.width())
    throw ShapeError("crop window out of bounds for " + t.shape().str());
  BasicTensor<Real> out(Shape{t.channels(), height, width});
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < height; ++y)
      std::copy_n(&t.at(c, y0 + y, x0), width, &out.at(c, y, 0));
  return out;
}

}  // namespace nuclass

#endif  // NUCLASS_TENSOR_HPP_
