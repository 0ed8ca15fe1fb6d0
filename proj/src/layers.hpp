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

#ifndef NUCLASS_LAYERS_HPP_
#define NUCLASS_LAYERS_HPP_

#include <vector>

#include "model_config.hpp"
#include "tensor.hpp"

namespace nuclass {

// Parameters of one ConvSpec layer. Weight layout is [out][in][k][k]. A
// transposed layer is stored as the equivalent correlation kernel applied to
// the zero-interleaved input.
template <class Real>
struct ConvParams {
  ConvSpec spec;
  std::vector<Real> weight;
  std::vector<Real> bias;   // empty unless spec.bias
  std::vector<Real> gamma;  // instance-norm scale, empty unless spec.normalized
  std::vector<Real> beta;   // instance-norm shift

  explicit ConvParams(const ConvSpec& s = {});
  void zero();
};

template <class Real>
struct ConvCache {
  Shape in_shape;
  BasicTensor<Real> padded;  // prepared input buffer the kernel correlated against
  BasicTensor<Real> xhat;    // normalized conv output
  std::vector<double> inv_std;
  BasicTensor<Real> pre;     // pre-activation output
};

struct LayerMode {
  double leaky_slope = 0.2;
  // Skip normalization, activation and the output squashing. Used to probe
  // the network as a purely linear map.
  bool linear = false;
};

// Reflection index for any pad width (folds repeatedly when pad >= n).
int reflect_index(int i, int n);

template <class Real>
BasicTensor<Real> conv_forward(const ConvParams<Real>& p, const BasicTensor<Real>& in, const LayerMode& mode,
                               ConvCache<Real>* cache);

// Accumulates parameter gradients into `grads` and returns d(loss)/d(input)
// (empty when want_input_grad is false).
template <class Real>
BasicTensor<Real> conv_backward(const ConvParams<Real>& p, const ConvCache<Real>& cache, BasicTensor<Real> grad_out,
                                const LayerMode& mode, ConvParams<Real>& grads, bool want_input_grad = true);

// G(x) = F(x) + x for a two-layer F.
template <class Real>
struct ResidualBlock {
  ResidualBlockSpec spec;
  std::vector<ConvParams<Real>> convs;
};

template <class Real>
BasicTensor<Real> residual_block_apply(const ResidualBlock<Real>& block, const BasicTensor<Real>& x,
                                       const LayerMode& mode = {});

}  // namespace nuclass

#endif  // NUCLASS_LAYERS_HPP_
