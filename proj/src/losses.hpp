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

#ifndef NUCLASS_LOSSES_HPP_
#define NUCLASS_LOSSES_HPP_

#include "tensor.hpp"

namespace nuclass {

// Mean absolute error. Accumulates in double.
template <class Real>
double mae_loss(const BasicTensor<Real>& x, const BasicTensor<Real>& y);

template <class Real>
double mse_loss(const BasicTensor<Real>& x, const BasicTensor<Real>& y);

// lambda * mean|x - y|. The mean (not the sum) keeps lambda = 1 in MAE units.
template <class Real>
double pixel_loss(const BasicTensor<Real>& x, const BasicTensor<Real>& y, double lambda);

// d(pixel_loss)/dx = lambda * sign(x - y) / N, zero at ties.
template <class Real>
BasicTensor<Real> pixel_loss_grad(const BasicTensor<Real>& x, const BasicTensor<Real>& y, double lambda);

// raw - compressed.
ResidualTensor residual_target(const FrameTensor& raw, const FrameTensor& compressed);

}  // namespace nuclass

#endif  // NUCLASS_LOSSES_HPP_
