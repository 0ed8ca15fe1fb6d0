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

#include "tensor.hpp"

#include <cmath>

#include <fmt/format.h>

namespace nuclass {

std::string Shape::str() const { return fmt::format("[{},{},{}]", channels, height, width); }

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", what, a.str(), b.str()));
}

void require_range(const Tensor& t, float lo, float hi, const char* what) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float v = t[i];
    if (!std::isfinite(v) || v < lo || v > hi)
      throw ShapeError(fmt::format("{}: element {} = {} outside [{}, {}]", what, i, v, lo, hi));
  }
}

}  // namespace nuclass
