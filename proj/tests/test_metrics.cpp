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
#include "metrics.hpp"
#include "support.hpp"

using namespace nuclass;

namespace {

// Window-by-window SSIM straight from the definition (no separable filtering).
double reference_ssim(const Tensor& x, const Tensor& y) {
  const int H = x.height(), W = x.width();
  const std::size_t plane = x.shape().plane();
  auto luma = [&](const Tensor& t, int r, int c) {
    const std::size_t i = static_cast<std::size_t>(r) * W + c;
    return 0.299 * t[i] + 0.587 * t[plane + i] + 0.114 * t[2 * plane + i];
  };
  double w[11][11], wsum = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) wsum += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  double total = 0;
  int count = 0;
  for (int r = 0; r + 11 <= H; ++r)
    for (int c = 0; c + 11 <= W; ++c) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          ma += w[i][j] / wsum * luma(x, r + i, c + j);
          mb += w[i][j] / wsum * luma(y, r + i, c + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double a = luma(x, r + i, c + j) - ma, b = luma(y, r + i, c + j) - mb;
          va += w[i][j] / wsum * a * a;
          vb += w[i][j] / wsum * b * b;
          cov += w[i][j] / wsum * a * b;
        }
      total += (2 * ma * mb + 1e-4) * (2 * cov + 9e-4) / ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4));
      ++count;
    }
  return total / count;
}

FrameSequence seq_of(std::vector<Tensor> frames) { return FrameSequence{std::move(frames), 6.0, "s"}; }

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("psnr closed forms") {
    const Tensor a(Shape{3, 16, 16}, 0.25f);
    CHECK_FALSE(psnr(a, a).has_value());
    const Tensor half(Shape{3, 16, 16}, 0.75f);
    CHECK(*psnr(a, half) == doctest::Approx(10 * std::log10(4.0)).epsilon(1e-12));
    CHECK(std::abs(*psnr(a, half) - 6.0206) < 1e-4);
    const Tensor tenth(Shape{3, 16, 16}, 0.35f);
    CHECK(std::abs(*psnr(a, tenth) - 20.0) < 1e-5);
    CHECK_THROWS_AS(psnr(a, Tensor(Shape{3, 16, 15})), ShapeError);
  }

  TEST_CASE("psnr properties") {
    std::mt19937_64 rng(12);
    const auto x = testing::random_frame(Shape{3, 20, 20}, rng);
    const auto y = testing::random_frame(Shape{3, 20, 20}, rng);
    CHECK(*psnr(x, y) == *psnr(y, x));
    auto xs = x, ys = y;
    for (auto& v : xs.values()) v = v * 0.5f;
    for (auto& v : ys.values()) v = v * 0.5f;
    auto xc = xs, yc = ys;
    for (auto& v : xc.values()) v += 0.25f;
    for (auto& v : yc.values()) v += 0.25f;
    CHECK(*psnr(xc, yc) == doctest::Approx(*psnr(xs, ys)).epsilon(1e-6));
    CHECK(*psnr(xs, ys) > *psnr(x, y));
    CHECK(*psnr(x, y) >= 0);
  }

  TEST_CASE("ssim of constant images equals the closed form") {
    const Tensor a(Shape{3, 16, 16}, 0.2f), b(Shape{3, 16, 16}, 0.6f);
    const double mu_a = static_cast<double>(0.2f), mu_b = static_cast<double>(0.6f);
    // Luminance of a constant frame reproduces the constant up to float rounding of the inputs.
    const double expected = (2 * mu_a * mu_b + 1e-4) / (mu_a * mu_a + mu_b * mu_b + 1e-4);
    CHECK(std::abs(ssim(a, b) - expected) < 1e-6);
    CHECK(std::abs(ssim(a, b) - 0.24010 / 0.40010) < 1e-6);
  }

  TEST_CASE("ssim agrees with a window-by-window reference") {
    std::mt19937_64 rng(21);
    const auto x = testing::random_frame(Shape{3, 19, 23}, rng);
    auto y = x;
    std::normal_distribution<float> n(0, 0.05f);
    for (auto& v : y.values()) v = std::clamp(v + n(rng), 0.0f, 1.0f);
    CHECK(ssim(x, y) == doctest::Approx(reference_ssim(x, y)).epsilon(1e-9));
    CHECK(ssim(x, y) < 1.0);
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
    CHECK(ssim(x, x) == 1.0);
  }

  TEST_CASE("ssim of an inverted symmetric pattern is below 1") {
    Tensor x(Shape{3, 16, 16});
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 16; ++r)
        for (int k = 0; k < 16; ++k) x.at(c, r, k) = ((r / 4 + k / 4) % 2) ? 0.8f : 0.2f;
    Tensor inv = x;
    for (auto& v : inv.values()) v = 1 - v;
    CHECK(ssim(x, inv) < 1.0);
  }

  TEST_CASE("ssim rejects frames smaller than the window") {
    CHECK_THROWS_AS(ssim(Tensor(Shape{3, 10, 30}), Tensor(Shape{3, 10, 30})), ShapeError);
  }

  TEST_CASE("evaluate_pair on identical sequences is the identity report") {
    std::mt19937_64 rng(5);
    std::vector<Tensor> f;
    for (int i = 0; i < 4; ++i) f.push_back(testing::random_frame(Shape{3, 16, 16}, rng));
    const auto r = evaluate_pair(seq_of(f), seq_of(f));
    CHECK(r.mean_mae == 0);
    CHECK(r.infinite_psnr_count == 4);
    CHECK_FALSE(r.mean_psnr_db.has_value());
    CHECK(r.mean_ssim == 1.0);
    const auto gate = quality_gate(r);
    CHECK(gate.psnr_ok);
    CHECK(gate.ssim_ok);
  }

  TEST_CASE("evaluate_pair means equal hand-computed means; metrics share the loss definitions") {
    std::mt19937_64 rng(6);
    std::vector<Tensor> a, b;
    for (int i = 0; i < 5; ++i) {
      a.push_back(testing::random_frame(Shape{3, 12, 14}, rng));
      b.push_back(testing::random_frame(Shape{3, 12, 14}, rng));
    }
    b[2] = a[2];
    const auto r = evaluate_pair(seq_of(a), seq_of(b), 3);
    REQUIRE(r.per_frame.size() == 5);
    double mae = 0, psnr_sum = 0, s = 0;
    for (int i = 0; i < 5; ++i) {
      CHECK(r.per_frame[i].mae == mae_loss(a[i], b[i]));
      CHECK(r.per_frame[i].mse == mse_loss(a[i], b[i]));
      mae += r.per_frame[i].mae / 5;
      s += r.per_frame[i].ssim / 5;
      if (i != 2) psnr_sum += *r.per_frame[i].psnr_db;
    }
    CHECK(r.infinite_psnr_count == 1);
    CHECK(r.mean_mae == doctest::Approx(mae).epsilon(1e-14));
    CHECK(r.mean_ssim == doctest::Approx(s).epsilon(1e-14));
    CHECK(*r.mean_psnr_db == doctest::Approx(psnr_sum / 4).epsilon(1e-14));
    CHECK_THROWS_AS(evaluate_pair(seq_of(a), seq_of({a[0]})), ShapeError);
  }

  TEST_CASE("quality gate thresholds") {
    MetricsReport r;
    r.per_frame.resize(1);
    r.mean_psnr_db = 31.2;
    r.mean_ssim = 0.93;
    auto g = quality_gate(r);
    CHECK(g.psnr_ok);
    CHECK(g.ssim_ok);
    r.mean_psnr_db = 29.9;
    CHECK_FALSE(quality_gate(r).psnr_ok);
    CHECK(quality_gate(r, QualityThresholds{29.0, 0.95}).psnr_ok);
    CHECK_FALSE(quality_gate(r, QualityThresholds{29.0, 0.95}).ssim_ok);
  }

  TEST_CASE("reports serialize to JSON and CSV") {
    std::mt19937_64 rng(7);
    std::vector<Tensor> a{testing::random_frame(Shape{3, 12, 12}, rng)}, b{a[0]};
    const auto r = evaluate_pair(seq_of(a), seq_of(b));
    const auto j = to_json(r);
    CHECK(j["per_frame"][0]["psnr_db"].is_null());
    CHECK(j["per_frame"][0]["psnr_infinite"] == true);
    CHECK(j["infinite_psnr_count"] == 1);
    CHECK(to_csv(r).find("inf") != std::string::npos);
    CHECK(comparison_csv(r, r, "compressed", "enhanced").rfind("index,compressed_mae", 0) == 0);
  }
}
