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

#include "optim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "error.hpp"

namespace nuclass {

Adam::Adam(std::vector<std::size_t> buffer_sizes, AdamConfig config) : config_(config) {
  if (!(config.beta1 >= 0 && config.beta1 < 1) || !(config.beta2 >= 0 && config.beta2 < 1) || !(config.epsilon > 0))
    throw ConfigError("adam: betas must be in [0,1) and epsilon positive");
  for (std::size_t n : buffer_sizes) {
    m_.emplace_back(n, 0.0f);
    v_.emplace_back(n, 0.0f);
  }
}

void Adam::step(std::span<const std::span<float>> params, std::span<const std::span<float>> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw PreconditionError(fmt::format("adam: expected {} buffers, got {} params / {} grads", m_.size(),
                                        params.size(), grads.size()));
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const float step = static_cast<float>(lr / c1);
  const float inv_c2_sqrt = static_cast<float>(1.0 / std::sqrt(c2));
  const float eps = static_cast<float>(config_.epsilon);
  const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    if (p.size() != m_[b].size() || g.size() != m_[b].size())
      throw PreconditionError(fmt::format("adam: buffer {} changed size", b));
    float* m = m_[b].data();
    float* v = v_[b].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = fb1 * m[i] + (1 - fb1) * g[i];
      v[i] = fb2 * v[i] + (1 - fb2) * g[i] * g[i];
      p[i] -= step * m[i] / (std::sqrt(v[i]) * inv_c2_sqrt + eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(double lr, PlateauConfig config) : config_(config), lr_(lr) {
  if (!(lr > 0)) throw ConfigError("learning_rate must be positive");
  if (!(config.factor > 0 && config.factor < 1)) throw ConfigError("plateau factor must be in (0,1)");
  if (config.patience < 0) throw ConfigError("plateau patience must be >= 0");
  if (config.min_lr < 0) throw ConfigError("plateau min_lr must be >= 0");
}

double PlateauScheduler::observe(double metric) {
  if (metric < best_ * (1.0 - config_.threshold)) {
    best_ = metric;
    bad_ = 0;
  } else {
    ++bad_;
  }
  if (bad_ > config_.patience) {
    const double next = std::max(lr_ * config_.factor, config_.min_lr);
    if (lr_ - next > 1e-12) lr_ = next;
    bad_ = 0;
  }
  return lr_;
}

}  // namespace nuclass
