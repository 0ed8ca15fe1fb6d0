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

#include "support.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "losses.hpp"
#include "process.hpp"

namespace nuclass::testing {

void randomize(BasicModel<double>& model, std::mt19937_64& rng) {
  // Around the trained regime: He-scaled weights, unit-ish normalization
  // scales, and residual branches / output adapter switched on at a small
  // scale instead of exactly zero.
  std::normal_distribution<double> n(0, 1);
  for (std::size_t li = 0; li < model.layer_count(); ++li) {
    auto& l = model.layer(li);
    const double fan_in = static_cast<double>(l.spec.in_channels) * l.spec.kernel * l.spec.kernel;
    const bool was_zero = std::all_of(l.weight.begin(), l.weight.end(), [](double v) { return v == 0; }) ||
                          (!l.gamma.empty() && std::all_of(l.gamma.begin(), l.gamma.end(), [](double v) { return v == 0; }));
    const double branch = was_zero ? 0.1 : 1.0;
    for (auto& v : l.weight) v = n(rng) * std::sqrt(2.0 / fan_in) * (l.gamma.empty() ? branch : 1.0);
    for (auto& v : l.bias) v = 0.1 * n(rng);
    for (auto& v : l.gamma) v = branch * (0.5 + 0.05 * n(rng));
    // Shift each channel to one side of the rectifier kink (both sides occur)
    // so that a small finite-difference stencil stays on one linear piece.
    std::bernoulli_distribution side(0.5);
    for (auto& v : l.beta) v = branch * ((side(rng) ? 3.0 : -3.0) + 0.1 * n(rng));
  }
}

Tensor random_frame(Shape shape, std::mt19937_64& rng) {
  Tensor t(shape);
  std::uniform_real_distribution<float> u(0, 1);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

GradCheckResult gradient_check(const ModelConfig& config, int height, int width, std::uint64_t seed,
                               std::size_t samples, double step, double tol, double floor) {
  std::mt19937_64 rng(seed);
  BasicModel<double> model(config);
  randomize(model, rng);
  const auto frame = tensor_cast<double>(random_frame(Shape{config.image_channels, height, width}, rng));

  ForwardCache<double> cache;
  const auto out = model.forward(frame, cache);
  // Keep the target well away from the prediction so no |.| kink is crossed.
  BasicTensor<double> target(out.shape());
  std::uniform_real_distribution<double> u(0.05, 0.3);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t i = 0; i < out.size(); ++i) target[i] = out[i] + (sign(rng) ? u(rng) : -u(rng));

  const double lambda = 1.0;
  auto grads = model.make_gradients();
  model.backward(cache, pixel_loss_grad(out, target, lambda), grads);
  auto grad_views = buffers(grads);
  auto params = model.parameters();

  std::size_t total = 0;
  for (const auto& p : params) total += p.values.size();
  const std::size_t stride = std::max<std::size_t>(1, total / std::max<std::size_t>(1, samples));

  auto loss = [&] { return pixel_loss(model.forward(frame), target, lambda); };
  GradCheckResult r;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].values;
    const std::size_t s = values.size() <= 16 ? 1 : stride;
    for (std::size_t i = (s > 1 ? (t * 7919) % s : 0); i < values.size(); i += s) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss();
      values[i] = saved - step;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = grad_views[t][i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++r.checked;
      if (rel > tol) ++r.failed;
      if (rel > r.max_rel) {
        r.max_rel = rel;
        r.worst = fmt::format("{}[{}] analytic {:.6e} numeric {:.6e}", params[t].name, i, analytic, numeric);
      }
    }
  }
  return r;
}

namespace {

long footprint(const BasicTensor<double>& g) {
  long lo = g.width(), hi = -1;
  for (int c = 0; c < g.channels(); ++c)
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x)
        if (g.at(c, y, x) != 0) {
          lo = std::min<long>(lo, x);
          hi = std::max<long>(hi, x);
        }
  return hi < lo ? 0 : hi - lo + 1;
}

}  // namespace

long brute_force_receptive_field(const ModelConfig& config) {
  BasicModel<double> model(config);
  for (std::size_t li = 0; li < model.layer_count(); ++li) {
    auto& l = model.layer(li);
    const double fan_in = static_cast<double>(l.spec.in_channels) * l.spec.kernel * l.spec.kernel;
    for (auto& v : l.weight) v = 1.0 / fan_in;
  }
  const long guess = receptive_field(config);
  const int d = config.size_divisor();
  const int width = static_cast<int>(((2 * guess + 64) / d + 1) * d);
  const int height = d;
  const BasicTensor<double> zero(Shape{config.image_channels, height, width});
  ForwardCache<double> cache;
  const auto out = model.forward(zero, cache, true);
  long widest = 0;
  for (int phase = 0; phase < d; ++phase) {
    BasicTensor<double> g(out.shape());
    g.at(0, 0, width / 2 + phase) = 1;
    auto grads = model.make_gradients();
    widest = std::max(widest, footprint(model.backward(cache, g, grads)));
  }
  return widest;
}

long brute_force_receptive_field(const std::vector<ConvSpec>& chain) {
  std::vector<ConvParams<double>> layers;
  long scale = 1;
  for (auto s : chain) {
    s.normalized = false;
    s.activated = false;
    ConvParams<double> p(s);
    for (auto& v : p.weight) v = 1.0;
    layers.push_back(std::move(p));
    if (s.stride == 2) scale *= 2;
  }
  const int width = static_cast<int>(64 * scale * static_cast<long>(chain.size() + 1));
  const LayerMode mode{0.2, true};
  std::vector<ConvCache<double>> caches(layers.size());
  BasicTensor<double> x(Shape{chain.front().in_channels, 1, width});
  for (std::size_t i = 0; i < layers.size(); ++i) x = conv_forward(layers[i], x, mode, &caches[i]);
  long widest = 0;
  for (long phase = 0; phase < scale; ++phase) {
    BasicTensor<double> g(x.shape());
    g.at(0, 0, x.width() / 2 + static_cast<int>(phase)) = 1;
    for (std::size_t i = layers.size(); i-- > 0;) {
      ConvParams<double> grads(layers[i].spec);
      grads.zero();
      g = conv_backward(layers[i], caches[i], std::move(g), mode, grads);
    }
    widest = std::max(widest, footprint(g));
  }
  return widest;
}

void make_test_video(const std::filesystem::path& path, double seconds, int width, int height, int fps,
                     std::uint64_t seed) {
  const std::string src = fmt::format(
      "life=s={}x{}:r={}:mold=10:ratio=0.5:seed={}:life_color=#e0c080:death_color=#203040:mold_color=#406080",
      width, height, fps, seed);
  run_process({"ffmpeg", "-nostdin", "-y", "-v", "error", "-f", "lavfi", "-i", src, "-t", fmt::format("{}", seconds),
               "-c:v", "libx264", "-crf", "0", "-preset", "ultrafast", "-pix_fmt", "yuv444p", "-threads", "1",
               "-fflags", "+bitexact", "-flags:v", "+bitexact", "-map_metadata", "-1", path.string()});
}

void make_life_montage(const std::filesystem::path& path, const std::vector<std::uint64_t>& seeds, double segment,
                       double skip, int width, int height, int fps) {
  std::string graph, inputs;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    graph += fmt::format(
        "life=s={}x{}:r={}:mold=10:ratio=0.5:seed={}:life_color=#e0c080:death_color=#203040:mold_color=#406080,"
        "trim=start={}:duration={},setpts=PTS-STARTPTS[s{}];",
        width, height, fps, seeds[i], skip, segment, i);
    inputs += fmt::format("[s{}]", i);
  }
  graph += fmt::format("{}concat=n={}:v=1:a=0[out0]", inputs, seeds.size());
  run_process({"ffmpeg", "-nostdin", "-y", "-v", "error", "-f", "lavfi", "-i", graph, "-c:v", "libx264", "-crf", "0",
               "-preset", "ultrafast", "-pix_fmt", "yuv444p", "-threads", "1", "-fflags", "+bitexact", "-flags:v",
               "+bitexact", "-map_metadata", "-1", path.string()});
}

TempDir::TempDir() {
  path = std::filesystem::temp_directory_path() / ("nuclass-test-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

}  // namespace nuclass::testing
