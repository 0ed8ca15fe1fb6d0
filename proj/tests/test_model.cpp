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
#include "model.hpp"
#include "support.hpp"

using namespace nuclass;

namespace {

ModelConfig tiny(int base = 2, int kernel = 7) {
  ModelConfig c;
  c.base_channels = base;
  c.kernel = kernel;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("config validation names the offending field") {
    ModelConfig c = tiny();
    c.encoder_blocks = 5;
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("encoder_blocks"), ConfigError);
    c = tiny();
    c.kernel = 4;
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("kernel"), ConfigError);
    c = tiny();
    c.downsample_positions = {1};
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("downsample_positions"), ConfigError);
    c = tiny();
    c.downsample_positions = {1, 6};
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = tiny();
    c.final_blocks = 4;
    CHECK_THROWS_WITH_AS(Model{c}, doctest::Contains("final_blocks"), ConfigError);
  }

  TEST_CASE("architecture has 12 four-conv blocks, 13 residual blocks and two resampling stages each way") {
    const auto plan = plan_architecture(ModelConfig{});
    REQUIRE(plan.encoder.size() == 6);
    REQUIRE(plan.decoder.size() == 6);
    CHECK(plan.bottleneck.size() == 8);
    CHECK(plan.final_res.size() == 5);
    int down = 0, up = 0;
    for (const auto& b : plan.encoder) {
      CHECK(b.convs.size() == 4);
      for (const auto& c : b.convs) {
        CHECK(c.kernel == 7);
        CHECK_FALSE(c.transpose);
        if (c.stride == 2) ++down;
      }
    }
    for (const auto& b : plan.decoder) {
      CHECK(b.convs.size() == 4);
      for (const auto& c : b.convs) {
        CHECK(c.kernel == 7);
        if (c.transpose) ++up;
        CHECK(c.stride == (c.transpose ? 2 : 1));
      }
    }
    CHECK(down == 2);
    CHECK(up == 2);
    for (const auto& [e, d] : plan.skip_pairs) CHECK(d == 5 - e);
    CHECK(plan.in_feature_map.kernel == 1);
    CHECK(plan.out_feature_map.kernel == 1);
    CHECK_FALSE(plan.out_feature_map.normalized);
  }

  TEST_CASE("parameter counts") {
    CHECK(param_count(ConvSpec{3, 8, 7, 1, 3, false, false, false, true}) == 1184);
    const ModelConfig c = tiny(4);
    const Model a(c), b(c);
    CHECK(a.param_count() == b.param_count());
    CHECK(a.param_count() == param_count(c));
    CHECK(a.param_count() == 553551);
    MESSAGE("default config parameters: " << param_count(ModelConfig{}) << " (reference network: 79975939)");
  }

  TEST_CASE("parameter enumeration is deterministic and finite") {
    const Model a(tiny(3)), b(tiny(3));
    CHECK(same_parameters(a, b));
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].name == pb[i].name);
      for (float v : pa[i].values) REQUIRE(std::isfinite(v));
    }
    ModelConfig other = tiny(3);
    other.seed = 6;
    CHECK_FALSE(same_parameters(a, Model(other)));
  }

  TEST_CASE("fresh model predicts the zero residual") {
    std::mt19937_64 rng(1);
    const Model m(tiny(2));
    for (Shape s : {Shape{3, 8, 8}, Shape{3, 12, 20}, Shape{3, 240, 320}}) {
      const auto out = m.forward(testing::random_frame(s, rng));
      CHECK(out == Tensor(s));
    }
  }

  TEST_CASE("frames not divisible by the downsampling factor are rejected") {
    const Model m(tiny(2));
    CHECK_THROWS_WITH_AS(m.forward(Tensor(Shape{3, 240, 321})), doctest::Contains("divisible by 4"), ShapeError);
    CHECK_THROWS_AS(m.forward(Tensor(Shape{1, 8, 8})), ShapeError);
  }

  TEST_CASE("random model output is bounded and shape-preserving") {
    std::mt19937_64 rng(2);
    BasicModel<double> dm(tiny(2));
    testing::randomize(dm, rng);
    for (auto& l : const_cast<ConvParams<double>&>(dm.layer(dm.layer_count() - 1)).weight) l *= 50;
    const Model m = model_cast<float>(dm);
    const auto x = testing::random_frame(Shape{3, 16, 24}, rng);
    const auto y = m.forward(x);
    REQUIRE(y.shape() == x.shape());
    for (float v : y.values()) {
      REQUIRE(std::isfinite(v));
      REQUIRE(v >= -1.0f);
      REQUIRE(v <= 1.0f);
    }
  }

  TEST_CASE("forward is bitwise deterministic") {
    std::mt19937_64 rng(4);
    BasicModel<double> dm(tiny(3));
    testing::randomize(dm, rng);
    const Model m = model_cast<float>(dm);
    const auto x = testing::random_frame(Shape{3, 16, 16}, rng);
    CHECK(m.forward(x) == m.forward(x));
    CHECK(model_cast<float>(dm).forward(x) == m.forward(x));
  }

  TEST_CASE("pixel loss gradients match central differences") {
    for (std::uint64_t seed : {1, 6, 7}) {
      const auto r = testing::gradient_check(tiny(2), 8, 8, seed, 1500);
      MESSAGE("seed " << seed << " checked " << r.checked << " max rel " << r.max_rel << " worst " << r.worst);
      CHECK(r.checked > 1000);
      CHECK(r.failed == 0);
    }
  }

  TEST_CASE("pixel loss gradients match fine central differences at many points") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const auto r = testing::gradient_check(tiny(2), 8, 8, seed, 800, 1e-6, 1e-3, 1e-6);
      CAPTURE(seed);
      CAPTURE(r.worst);
      CHECK(r.failed == 0);
    }
    const auto wide = testing::gradient_check(tiny(2), 16, 24, 3, 800, 1e-6, 1e-3, 1e-6);
    CAPTURE(wide.worst);
    CHECK(wide.failed == 0);
  }

  TEST_CASE("receptive field of layer chains") {
    const ConvGeometry s1{7, 1, 3, false}, s2{7, 2, 3, false};
    CHECK(receptive_field(std::vector<ConvGeometry>{s1}) == 7);
    CHECK(receptive_field(std::vector<ConvGeometry>{s1, s1}) == 13);
    CHECK(receptive_field(std::vector<ConvGeometry>{s1, s2, s1}) == 25);
    const ConvSpec c1{1, 1, 7, 1, 3}, c2{1, 1, 7, 2, 3};
    CHECK(testing::brute_force_receptive_field(std::vector<ConvSpec>{c1}) == 7);
    CHECK(testing::brute_force_receptive_field(std::vector<ConvSpec>{c1, c1}) == 13);
    CHECK(testing::brute_force_receptive_field(std::vector<ConvSpec>{c1, c2, c1}) == 25);
  }

  TEST_CASE("receptive field of full networks matches the perturbation footprint") {
    struct Case {
      int kernel;
      std::vector<int> down;
    };
    for (const auto& c : {Case{3, {1, 3}}, Case{3, {0, 5}}, Case{5, {2, 4}}, Case{7, {1, 3}}}) {
      ModelConfig cfg = tiny(1, c.kernel);
      cfg.downsample_positions = c.down;
      CAPTURE(c.kernel);
      CHECK(receptive_field(cfg) == testing::brute_force_receptive_field(cfg));
    }
  }
}
