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

#include "model.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include <fmt/format.h>

namespace nuclass {

namespace {

template <class Real>
BasicTensor<Real> concat_channels(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeError(fmt::format("skip connection joins {} with {}", a.shape().str(), b.shape().str()));
  BasicTensor<Real> out(Shape{a.channels() + b.channels(), a.height(), a.width()});
  std::copy_n(a.data(), a.size(), out.data());
  std::copy_n(b.data(), b.size(), out.data() + a.size());
  return out;
}

template <class Real>
std::pair<BasicTensor<Real>, BasicTensor<Real>> split_channels(const BasicTensor<Real>& t, int first) {
  BasicTensor<Real> a(Shape{first, t.height(), t.width()});
  BasicTensor<Real> b(Shape{t.channels() - first, t.height(), t.width()});
  std::copy_n(t.data(), a.size(), a.data());
  std::copy_n(t.data() + a.size(), b.size(), b.data());
  return {std::move(a), std::move(b)};
}

template <class Real>
void add_into(BasicTensor<Real>& acc, const BasicTensor<Real>& x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

}  // namespace

template <class Real>
BasicModel<Real>::BasicModel(const ModelConfig& config) : config_(config), plan_(plan_architecture(config)) {
  auto add = [&](const ConvSpec& spec, std::string name) {
    layers_.emplace_back(spec);
    layer_names_.push_back(std::move(name));
  };
  add(plan_.in_feature_map, "in_feature_map");
  for (std::size_t i = 0; i < plan_.encoder.size(); ++i)
    for (std::size_t c = 0; c < plan_.encoder[i].convs.size(); ++c)
      add(plan_.encoder[i].convs[c], fmt::format("encoder.{}.conv{}", i, c));
  for (std::size_t r = 0; r < plan_.bottleneck.size(); ++r)
    for (std::size_t c = 0; c < 2; ++c) add(plan_.bottleneck[r].convs[c], fmt::format("bottleneck.{}.conv{}", r, c));
  for (std::size_t j = 0; j < plan_.decoder.size(); ++j)
    for (std::size_t c = 0; c < plan_.decoder[j].convs.size(); ++c)
      add(plan_.decoder[j].convs[c], fmt::format("decoder.{}.conv{}", j, c));
  for (std::size_t r = 0; r < plan_.final_res.size(); ++r)
    for (std::size_t c = 0; c < 2; ++c) add(plan_.final_res[r].convs[c], fmt::format("final_res.{}.conv{}", r, c));
  add(plan_.out_feature_map, "out_feature_map");

  std::mt19937_64 rng(config_.seed);
  const double gain = std::sqrt(2.0 / (1.0 + config_.leaky_slope * config_.leaky_slope));
  for (auto& layer : layers_) {
    const auto& s = layer.spec;
    const double fan_in = static_cast<double>(s.in_channels) * s.kernel * s.kernel;
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(fan_in));
    for (auto& w : layer.weight) w = static_cast<Real>(dist(rng));
  }
  // Zero residual at initialization.
  for (int r = 0; r < static_cast<int>(plan_.bottleneck.size()); ++r) {
    auto& last = layers_[bottleneck_layer(r, 1)];
    std::fill(last.gamma.begin(), last.gamma.end(), Real(0));
  }
  for (int r = 0; r < static_cast<int>(plan_.final_res.size()); ++r) {
    auto& last = layers_[final_layer(r, 1)];
    std::fill(last.gamma.begin(), last.gamma.end(), Real(0));
  }
  layers_[out_layer()].zero();
}

template <class Real>
std::vector<NamedParam<Real>> BasicModel<Real>::parameters() {
  std::vector<NamedParam<Real>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    const auto& s = l.spec;
    out.push_back({layer_names_[i] + ".weight", {s.out_channels, s.in_channels, s.kernel, s.kernel}, l.weight});
    if (!l.bias.empty()) out.push_back({layer_names_[i] + ".bias", {s.out_channels}, l.bias});
    if (!l.gamma.empty()) {
      out.push_back({layer_names_[i] + ".gamma", {s.out_channels}, l.gamma});
      out.push_back({layer_names_[i] + ".beta", {s.out_channels}, l.beta});
    }
  }
  return out;
}

template <class Real>
std::vector<NamedParam<const Real>> BasicModel<Real>::parameters() const {
  auto mutable_params = const_cast<BasicModel*>(this)->parameters();
  std::vector<NamedParam<const Real>> out;
  out.reserve(mutable_params.size());
  for (auto& p : mutable_params) out.push_back({std::move(p.name), std::move(p.dims), p.values});
  return out;
}

template <class Real>
std::uint64_t BasicModel<Real>::param_count() const {
  std::uint64_t n = 0;
  for (const auto& p : parameters()) n += p.values.size();
  return n;
}

template <class Real>
void BasicModel<Real>::check_input(const Shape& shape) const {
  if (shape.channels != config_.image_channels)
    throw ShapeError(fmt::format("model expects {} channels, got frame {}", config_.image_channels, shape.str()));
  const int d = config_.size_divisor();
  if (shape.height < d || shape.width < d || shape.height % d != 0 || shape.width % d != 0)
    throw ShapeError(fmt::format("frame {} must have height and width divisible by {}", shape.str(), d));
}

template <class Real>
BasicTensor<Real> BasicModel<Real>::forward(const BasicTensor<Real>& frame) const {
  ForwardCache<Real> scratch;
  return forward(frame, scratch);
}

template <class Real>
BasicTensor<Real> BasicModel<Real>::forward(const BasicTensor<Real>& frame, ForwardCache<Real>& cache,
                                            bool linear) const {
  check_input(frame.shape());
  const LayerMode mode{config_.leaky_slope, linear};
  cache.linear = linear;
  cache.layers.assign(layers_.size(), {});
  auto run = [&](std::size_t li, const BasicTensor<Real>& x) {
    return conv_forward(layers_[li], x, mode, &cache.layers[li]);
  };
  auto residual = [&](std::size_t first, BasicTensor<Real>& x) {
    BasicTensor<Real> f = run(first + 1, run(first, x));
    add_into(x, f);
  };

  BasicTensor<Real> x = run(0, frame);
  std::vector<BasicTensor<Real>> skips(plan_.encoder.size());
  for (int i = 0; i < static_cast<int>(plan_.encoder.size()); ++i) {
    for (int c = 0; c < 4; ++c) x = run(encoder_layer(i, c), x);
    skips[i] = x;
  }
  for (int r = 0; r < static_cast<int>(plan_.bottleneck.size()); ++r) residual(bottleneck_layer(r, 0), x);
  for (int j = 0; j < static_cast<int>(plan_.decoder.size()); ++j) {
    x = concat_channels(x, skips[plan_.encoder.size() - 1 - j]);
    for (int c = 0; c < 4; ++c) x = run(decoder_layer(j, c), x);
  }
  for (int r = 0; r < static_cast<int>(plan_.final_res.size()); ++r) residual(final_layer(r, 0), x);
  x = run(out_layer(), x);
  if (!linear)
    for (auto& v : x.values()) v = std::tanh(v);
  cache.output = x;
  return x;
}

template <class Real>
Gradients<Real> BasicModel<Real>::make_gradients() const {
  Gradients<Real> g;
  g.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.emplace_back(l.spec);
    g.back().zero();
  }
  return g;
}

template <class Real>
BasicTensor<Real> BasicModel<Real>::backward(const ForwardCache<Real>& cache, const BasicTensor<Real>& grad_output,
                                             Gradients<Real>& grads) const {
  require_same_shape(grad_output.shape(), cache.output.shape(), "backward");
  const LayerMode mode{config_.leaky_slope, cache.linear};
  auto back = [&](std::size_t li, BasicTensor<Real> g) {
    return conv_backward(layers_[li], cache.layers[li], std::move(g), mode, grads[li]);
  };
  auto residual = [&](std::size_t first, BasicTensor<Real>& g) {
    BasicTensor<Real> gf = back(first, back(first + 1, g));
    add_into(g, gf);
  };

  BasicTensor<Real> g = grad_output;
  if (!cache.linear)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= Real(1) - cache.output[i] * cache.output[i];
  g = back(out_layer(), std::move(g));
  for (int r = static_cast<int>(plan_.final_res.size()) - 1; r >= 0; --r) residual(final_layer(r, 0), g);

  std::vector<BasicTensor<Real>> skip_grads(plan_.encoder.size());
  for (int j = static_cast<int>(plan_.decoder.size()) - 1; j >= 0; --j) {
    for (int c = 3; c >= 0; --c) g = back(decoder_layer(j, c), std::move(g));
    const int skip = plan_.decoder[j].skip_channels;
    auto [main, to_skip] = split_channels(g, g.channels() - skip);
    skip_grads[plan_.encoder.size() - 1 - j] = std::move(to_skip);
    g = std::move(main);
  }
  for (int r = static_cast<int>(plan_.bottleneck.size()) - 1; r >= 0; --r) residual(bottleneck_layer(r, 0), g);
  for (int i = static_cast<int>(plan_.encoder.size()) - 1; i >= 0; --i) {
    add_into(g, skip_grads[i]);
    for (int c = 3; c >= 0; --c) g = back(encoder_layer(i, c), std::move(g));
  }
  return back(0, std::move(g));
}

bool same_parameters(const Model& a, const Model& b) {
  if (!(a.config() == b.config())) return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (std::memcmp(pa[i].values.data(), pb[i].values.data(), pa[i].values.size_bytes()) != 0) return false;
  return true;
}

template class BasicModel<float>;
template class BasicModel<double>;

}  // namespace nuclass
