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

#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "losses.hpp"
#include "optim.hpp"
#include "support.hpp"

using namespace nuclass;

namespace {

Tensor row(std::vector<float> v) {
  const int n = static_cast<int>(v.size());
  return Tensor(Shape{1, 1, n}, std::move(v));
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("mae") {
    CHECK(mae_loss(row({0, 0.5f, 1}), row({0, 0.5f, 1})) == 0);
    CHECK(mae_loss(row({0, 0.5f, 1}), row({0, 0, 1})) == doctest::Approx(1.0 / 6).epsilon(1e-12));
    CHECK(mae_loss(row({0.3f, 0.9f}), row({0.1f, 0.2f})) == mae_loss(row({0.1f, 0.2f}), row({0.3f, 0.9f})));
    CHECK_THROWS_AS(mae_loss(row({0}), row({0, 1})), ShapeError);
  }

  TEST_CASE("mse") {
    CHECK(mse_loss(row({0, 1}), row({0, 1})) == 0);
    CHECK(mse_loss(row({0, 1}), row({1, 0})) == 1.0);
    const double c = 0.25;
    CHECK(mse_loss(row({0.5f, 0.75f, 0.25f}), row({0.25f, 0.5f, 0.0f})) == doctest::Approx(c * c).epsilon(1e-12));
    CHECK_THROWS_AS(mse_loss(row({0}), Tensor(Shape{2, 1, 1})), ShapeError);
  }

  TEST_CASE("pixel loss") {
    CHECK(pixel_loss(row({0.2f, 0.4f}), row({0.2f, 0.4f}), 1.0) == 0);
    CHECK(pixel_loss(row({0.5f}), row({0}), 2.0) == 1.0);
    const auto x = row({0.1f, 0.7f, 0.3f}), y = row({0.4f, 0.2f, 0.3f});
    CHECK(pixel_loss(x, y, 3.0) == doctest::Approx(3 * pixel_loss(x, y, 1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(pixel_loss(x, y, 0.0), ConfigError);
    CHECK_THROWS_AS(pixel_loss(x, y, -1.0), ConfigError);
  }

  TEST_CASE("losses are non-negative and zero only for equal inputs") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
      const auto a = testing::random_frame(Shape{3, 4, 5}, rng);
      auto b = a;
      CHECK(mae_loss(a, b) == 0);
      CHECK(mse_loss(a, b) == 0);
      b[i] += 0.01f;
      CHECK(mae_loss(a, b) > 0);
      CHECK(mse_loss(a, b) > 0);
      CHECK(pixel_loss(a, b, 0.5) > 0);
    }
  }

  TEST_CASE("pixel loss gradient is lambda sign(x - y) / N and matches finite differences") {
    std::mt19937_64 rng(8);
    const auto xs = testing::random_frame(Shape{2, 3, 4}, rng);
    const auto ys = testing::random_frame(Shape{2, 3, 4}, rng);
    const auto x = tensor_cast<double>(xs), y = tensor_cast<double>(ys);
    const double lambda = 1.7;
    const auto g = pixel_loss_grad(x, y, lambda);
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double sign = x[i] > y[i] ? 1 : -1;
      CHECK(g[i] == doctest::Approx(lambda * sign / n).epsilon(1e-14));
      auto xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const double fd = (pixel_loss(xp, y, lambda) - pixel_loss(xm, y, lambda)) / 2e-6;
      CHECK(fd == doctest::Approx(g[i]).epsilon(1e-6));
    }
    CHECK(pixel_loss_grad(row({0.5f}), row({0.5f}), 1.0)[0] == 0);
  }

  TEST_CASE("residual target") {
    CHECK(residual_target(row({0.8f}), row({0.6f}))[0] == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(residual_target(row({0.3f, 0.4f}), row({0.3f, 0.4f})) == Tensor(Shape{1, 1, 2}));
    CHECK(residual_target(row({0}), row({1}))[0] == -1.0f);
    CHECK_THROWS_AS(residual_target(row({0}), row({0, 0})), ShapeError);
  }
}

TEST_SUITE("optim") {
  TEST_CASE("adam first step moves each parameter by lr against the gradient sign") {
    std::vector<float> p{1.0f, -2.0f, 0.5f}, g{0.3f, -4.0f, 0.0f};
    Adam adam({3});
    std::vector<std::span<float>> ps{p}, gs{g};
    adam.step(ps, gs, 0.01);
    CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-1.99).epsilon(1e-6));
    CHECK(p[2] == 0.5f);
  }

  TEST_CASE("adam matches a double-precision reference over several steps") {
    std::vector<float> p{0.7f}, g{0};
    double rp = 0.7, m = 0, v = 0;
    Adam adam({1});
    std::vector<std::span<float>> ps{p}, gs{g};
    for (int t = 1; t <= 25; ++t) {
      const double grad = std::sin(0.3 * t) + 2 * rp;
      g[0] = static_cast<float>(grad);
      adam.step(ps, gs, 1e-2);
      m = 0.9 * m + 0.1 * grad;
      v = 0.999 * v + 0.001 * grad * grad;
      rp -= 1e-2 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    }
    CHECK(p[0] == doctest::Approx(rp).epsilon(1e-5));
    CHECK(adam.steps() == 25);
  }

  TEST_CASE("plateau halves the rate after patience + 1 flat epochs") {
    PlateauScheduler s(1e-3, PlateauConfig{0.5, 10, 1e-6});
    s.observe(0.3);
    for (int i = 0; i < 10; ++i) CHECK(s.observe(0.3) == 1e-3);
    CHECK(s.observe(0.3) == 5e-4);
  }

  TEST_CASE("plateau keeps the rate while improving and never goes below min_lr") {
    PlateauScheduler s(1e-3, PlateauConfig{0.5, 2, 3e-4});
    double loss = 1.0;
    for (int i = 0; i < 20; ++i) CHECK(s.observe(loss *= 0.9) == 1e-3);
    double prev = s.lr();
    for (int i = 0; i < 40; ++i) {
      const double lr = s.observe(1.0);
      CHECK(lr <= prev);
      CHECK(lr >= 3e-4);
      prev = lr;
    }
    CHECK(s.lr() == 3e-4);
  }

  TEST_CASE("plateau rejects invalid settings") {
    CHECK_THROWS_AS(PlateauScheduler(0.0), ConfigError);
    CHECK_THROWS_AS(PlateauScheduler(1e-3, PlateauConfig{1.0}), ConfigError);
    CHECK_THROWS_AS(PlateauScheduler(1e-3, PlateauConfig{0.0}), ConfigError);
  }
}
