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

#ifndef NUCLASS_MODEL_HPP_
#define NUCLASS_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "layers.hpp"
#include "model_config.hpp"
#include "tensor.hpp"

namespace nuclass {

template <class Real>
struct NamedParam {
  std::string name;
  std::vector<int> dims;
  std::span<Real> values;
};

template <class Real>
struct ForwardCache {
  std::vector<ConvCache<Real>> layers;
  BasicTensor<Real> output;  // post-tanh residual
  bool linear = false;
};

// Per-layer gradient buffers, same layout as the model's layers.
template <class Real>
using Gradients = std::vector<ConvParams<Real>>;

// Buffers of a layer list in parameter enumeration order (weight, bias,
// gamma, beta per layer, absent ones skipped).
template <class Real>
std::vector<std::span<Real>> buffers(std::vector<ConvParams<Real>>& layers) {
  std::vector<std::span<Real>> out;
  for (auto& l : layers)
    for (auto* v : {&l.weight, &l.bias, &l.gamma, &l.beta})
      if (!v->empty()) out.emplace_back(*v);
  return out;
}

// The encoder/decoder residual-prediction network. Immutable during
// inference: forward() is const and keeps all scratch state in the caller's
// cache, so concurrent forwards on one instance are safe.
template <class Real>
class BasicModel {
 public:
  // Validates the config and initializes deterministically from config.seed.
  // The last layer of every residual branch ends in a zero-scaled
  // normalization and the output adapter is all zeros, so a fresh model
  // predicts the zero residual.
  explicit BasicModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const ArchitecturePlan& plan() const { return plan_; }

  // Deterministic enumeration of every named parameter tensor.
  std::vector<NamedParam<Real>> parameters();
  std::vector<NamedParam<const Real>> parameters() const;
  std::uint64_t param_count() const;

  // Residual prediction in [-1,1], same shape as the frame.
  BasicTensor<Real> forward(const BasicTensor<Real>& frame) const;
  BasicTensor<Real> forward(const BasicTensor<Real>& frame, ForwardCache<Real>& cache, bool linear = false) const;

  Gradients<Real> make_gradients() const;
  // Accumulates d(loss)/d(params) into grads given d(loss)/d(output). Returns
  // d(loss)/d(frame).
  BasicTensor<Real> backward(const ForwardCache<Real>& cache, const BasicTensor<Real>& grad_output,
                             Gradients<Real>& grads) const;

  std::size_t layer_count() const { return layers_.size(); }
  const ConvParams<Real>& layer(std::size_t i) const { return layers_[i]; }
  ConvParams<Real>& layer(std::size_t i) { return layers_[i]; }

  // Throws ShapeError unless the frame can pass through the network.
  void check_input(const Shape& shape) const;

 private:
  std::size_t encoder_layer(int block, int conv) const { return 1 + 4 * block + conv; }
  std::size_t bottleneck_layer(int block, int conv) const { return 25 + 2 * block + conv; }
  std::size_t decoder_layer(int block, int conv) const { return 41 + 4 * block + conv; }
  std::size_t final_layer(int block, int conv) const { return 65 + 2 * block + conv; }
  std::size_t out_layer() const { return 75; }

  ModelConfig config_;
  ArchitecturePlan plan_;
  std::vector<ConvParams<Real>> layers_;
  std::vector<std::string> layer_names_;
};

using Model = BasicModel<float>;

// Casts parameters between precisions (for finite-difference checks).
template <class To, class From>
BasicModel<To> model_cast(const BasicModel<From>& m) {
  BasicModel<To> out(m.config());
  auto dst = out.parameters();
  auto src = m.parameters();
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < src[i].values.size(); ++j) dst[i].values[j] = static_cast<To>(src[i].values[j]);
  return out;
}

// Bitwise equality of all parameters.
bool same_parameters(const Model& a, const Model& b);

}  // namespace nuclass

#endif  // NUCLASS_MODEL_HPP_
