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

#include "losses.hpp"

#include <cmath>

#include "error.hpp"

namespace nuclass {

namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
}

}  // namespace

template <class Real>
double mae_loss(const BasicTensor<Real>& x, const BasicTensor<Real>& y) {
  require_same_shape(x.shape(), y.shape(), "mae_loss");
  const auto a = x.values();
  const auto b = y.values();
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

template <class Real>
double mse_loss(const BasicTensor<Real>& x, const BasicTensor<Real>& y) {
  require_same_shape(x.shape(), y.shape(), "mse_loss");
  const auto a = x.values();
  const auto b = y.values();
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

template <class Real>
double pixel_loss(const BasicTensor<Real>& x, const BasicTensor<Real>& y, double lambda) {
  require_lambda(lambda);
  return lambda * mae_loss(x, y);
}

template <class Real>
BasicTensor<Real> pixel_loss_grad(const BasicTensor<Real>& x, const BasicTensor<Real>& y, double lambda) {
  require_lambda(lambda);
  require_same_shape(x.shape(), y.shape(), "pixel_loss_grad");
  BasicTensor<Real> g(x.shape());
  const auto a = x.values();
  const auto b = y.values();
  auto out = g.values();
  const Real scale = static_cast<Real>(lambda / static_cast<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > b[i] ? scale : a[i] < b[i] ? -scale : Real(0);
  return g;
}

ResidualTensor residual_target(const FrameTensor& raw, const FrameTensor& compressed) {
  require_same_shape(raw.shape(), compressed.shape(), "residual_target");
  ResidualTensor r(raw.shape());
  const auto a = raw.values();
  const auto b = compressed.values();
  auto out = r.values();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return r;
}

#define NUCLASS_INSTANTIATE(Real)                                                        \
  template double mae_loss(const BasicTensor<Real>&, const BasicTensor<Real>&);          \
  template double mse_loss(const BasicTensor<Real>&, const BasicTensor<Real>&);          \
  template double pixel_loss(const BasicTensor<Real>&, const BasicTensor<Real>&, double); \
  template BasicTensor<Real> pixel_loss_grad(const BasicTensor<Real>&, const BasicTensor<Real>&, double);
NUCLASS_INSTANTIATE(float)
NUCLASS_INSTANTIATE(double)
#undef NUCLASS_INSTANTIATE

}  // namespace nuclass
