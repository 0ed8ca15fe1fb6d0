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

#include <filesystem>
#include <fstream>
#include <random>

#include "checkpoint.hpp"
#include "enhance.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "quantize.hpp"
#include "support.hpp"

using namespace nuclass;
using nuclass::testing::TempDir;
namespace fs = std::filesystem;

namespace {

ModelConfig small(std::uint64_t seed = 3) {
  ModelConfig c;
  c.base_channels = 2;
  c.kernel = 3;
  c.seed = seed;
  return c;
}

// A model with every parameter randomized (no zero-initialized branches).
Model random_model(std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  BasicModel<double> m(small(seed));
  testing::randomize(m, rng);
  for (auto& p : m.parameters())
    for (auto& v : p.values) v *= scale;
  return model_cast<float>(m);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("png round trip is lossless after 8-bit quantization") {
    TempDir dir;
    std::mt19937_64 rng(1);
    const auto f = testing::random_frame(Shape{3, 10, 14}, rng);
    write_png(dir.path / "a.png", f);
    const auto back = read_png(dir.path / "a.png");
    CHECK(back == quantize_8bit(f));
    write_png(dir.path / "b.png", back);
    CHECK(read_file(dir.path / "a.png") == read_file(dir.path / "b.png"));
  }

  TEST_CASE("rgb24 conversion rounds to nearest") {
    Tensor f(Shape{3, 1, 1});
    f[0] = 0.5f;
    f[1] = 1.2f;
    f[2] = 0.001f;
    const auto b = frame_to_rgb24(f);
    CHECK(b[0] == 128);
    CHECK(b[1] == 255);
    CHECK(b[2] == 0);
    CHECK(frame_from_rgb24(b, 1, 1)[0] == 128 / 255.0f);
    CHECK_THROWS_AS(frame_from_rgb24(b, 2, 1), ShapeError);
  }

  TEST_CASE("unreadable images raise I/O errors") {
    TempDir dir;
    CHECK_THROWS_AS(read_png(dir.path / "missing.png"), IoError);
    std::ofstream(dir.path / "bad.png") << "not a png";
    CHECK_THROWS_AS(read_png(dir.path / "bad.png"), IoError);
    CHECK_THROWS_AS(write_png(dir.path / "no" / "dir" / "x.png", Tensor(Shape{3, 2, 2})), IoError);
  }

  TEST_CASE("reassemble_video writes one lossless file per frame") {
    TempDir dir;
    std::mt19937_64 rng(2);
    FrameSequence s;
    for (int i = 0; i < 10; ++i) s.frames.push_back(quantize_8bit(testing::random_frame(Shape{3, 8, 12}, rng)));
    reassemble_video(s, dir.path / "out");
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir.path / "out")) files += e.path().extension() == ".png";
    CHECK(files == 10);
    CHECK(fs::exists(dir.path / "out" / "000009.png"));
    CHECK(read_frame_directory(dir.path / "out").frames == s.frames);
    CHECK_THROWS_AS(reassemble_video(FrameSequence{}, dir.path / "e"), PreconditionError);
    s.frames[4] = Tensor(Shape{3, 8, 8});
    CHECK_THROWS_WITH_AS(reassemble_video(s, dir.path / "m"), doctest::Contains("frame 4"), ShapeError);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("float checkpoints round trip bit-exactly") {
    TempDir dir;
    const Model m = random_model(4);
    save_checkpoint(m, dir.path / "m.ckpt");
    std::optional<QuantSpec> q = QuantSpec{};
    const Model back = load_checkpoint(dir.path / "m.ckpt", &q);
    CHECK_FALSE(q.has_value());
    CHECK(back.config() == m.config());
    CHECK(same_parameters(back, m));
  }

  TEST_CASE("archive header carries canonical config JSON and little-endian floats") {
    const Model m(small());
    const std::string bytes = serialize_checkpoint(m);
    CHECK(bytes.rfind("NUCLSCK1", 0) == 0);
    CHECK(bytes.find(to_json(m.config()).dump()) != std::string::npos);
    ArchiveStats stats;
    serialize_checkpoint(m, std::nullopt, &stats);
    CHECK(stats.payload_bytes == m.param_count() * 4);
    CHECK(stats.total_bytes == bytes.size());
  }

  TEST_CASE("corrupt archives are rejected") {
    const Model m(small());
    const std::string bytes = serialize_checkpoint(m);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), IoError);
    CHECK_THROWS_AS(deserialize_checkpoint("XXXXXXXX" + bytes.substr(8)), IoError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), IoError);
    std::string bad = bytes;
    const auto at = bad.find("\"base_channels\":2");
    REQUIRE(at != std::string::npos);
    bad[at + 16] = '3';
    CHECK_THROWS_AS(deserialize_checkpoint(bad), ShapeError);
    bad = bytes;
    bad[bad.find("\"kernel\":3") + 9] = '4';
    CHECK_THROWS_AS(deserialize_checkpoint(bad), ConfigError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/m.ckpt"), IoError);
  }

  TEST_CASE("quantized checkpoints store packed codes and reload the same floats") {
    const Model m = random_model(5);
    for (int bits : {16, 14, 8, 5}) {
      CAPTURE(bits);
      const QuantSpec spec = auto_spec(m, bits);
      const Model q = quantize_model(m, spec);
      ArchiveStats stats;
      const std::string bytes = serialize_checkpoint(q, spec, &stats);
      std::optional<QuantSpec> got;
      const Model back = deserialize_checkpoint(bytes, &got);
      REQUIRE(got.has_value());
      CHECK(*got == spec);
      CHECK(same_parameters(back, q));
      std::uint64_t expect = 0;
      for (const auto& p : q.parameters()) expect += (p.values.size() * bits + 7) / 8;
      CHECK(stats.payload_bytes == expect);
    }
    CHECK_THROWS_AS(serialize_checkpoint(m, auto_spec(m, 8)), RangeError);
  }
}

TEST_SUITE("quantize") {
  TEST_CASE("fixed-point rounding examples") {
    CHECK(quantize_value(1.0 / 3, QuantSpec{16, 8}) == 85.0 / 256);
    CHECK(quantize_value(1.0 / 3, QuantSpec{16, 8}) == 0.33203125);
    CHECK(quantize_value(0.5, QuantSpec{16, 1}) == 0.5);
    CHECK(quantize_value(0.5, QuantSpec{16, 12}) == 0.5);
    CHECK(quantize_value(0.4, QuantSpec{8, 0}) == 0.0);
    CHECK(quantize_value(2.5, QuantSpec{8, 0}) == 2.0);  // ties to even
    CHECK(quantize_value(-3.5, QuantSpec{8, 0}) == -4.0);
  }

  TEST_CASE("range errors name the tensor") {
    CHECK_THROWS_AS(quantize_value(200.0, QuantSpec{8, 0}), RangeError);
    const Model m = random_model(6, 4.0);
    CHECK_THROWS_WITH_AS(quantize_model(m, QuantSpec{8, 7}), doctest::Contains("tensor '"), RangeError);
    CHECK_THROWS_AS(validate(QuantSpec{1, 0}), ConfigError);
    CHECK_THROWS_AS(validate(QuantSpec{16, 16}), ConfigError);
    CHECK_THROWS_AS(validate(QuantSpec{33, 0}), ConfigError);
  }

  TEST_CASE("automatic frac bits cover the largest parameter with maximal precision") {
    for (double scale : {0.1, 0.9, 1.0, 3.0, 100.0}) {
      const Model m = random_model(7, scale);
      double maxabs = 0;
      for (const auto& p : m.parameters())
        for (float v : p.values) maxabs = std::max(maxabs, std::abs(static_cast<double>(v)));
      for (int bits : {8, 12, 16}) {
        CAPTURE(scale);
        CAPTURE(bits);
        if (maxabs >= std::ldexp(1.0, bits - 1)) {
          CHECK_THROWS_AS(auto_spec(m, bits), RangeError);
          continue;
        }
        const QuantSpec s = auto_spec(m, bits);
        const int rule = bits - 1 - static_cast<int>(std::ceil(std::log2(std::max(maxabs, 1.0))));
        CHECK(std::nearbyint(maxabs * s.scale()) <= s.max_code());
        CHECK(s.frac_bits <= rule);
        CHECK(s.frac_bits >= rule - 1);
        if (s.frac_bits < rule) CHECK(std::nearbyint(maxabs * std::ldexp(1.0, rule)) > s.max_code());
        if (maxabs >= 1) CHECK(std::nearbyint(maxabs * s.scale() * 2) > s.max_code());
        CHECK_NOTHROW(quantize_model(m, s));
      }
    }
  }

  TEST_CASE("quantization is idempotent, bounded by half a step and leaves the input untouched") {
    const Model m = random_model(8);
    const Model copy = m;
    for (int bits : {4, 8, 14, 16}) {
      const QuantSpec s = auto_spec(m, bits);
      const Model q = quantize_model(m, s);
      CHECK(same_parameters(quantize_model(q, s), q));
      const double bound = std::ldexp(1.0, -s.frac_bits - 1);
      const auto a = m.parameters();
      const auto b = q.parameters();
      for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < a[t].values.size(); ++i)
          REQUIRE(std::abs(static_cast<double>(a[t].values[i]) - b[t].values[i]) <= bound);
    }
    CHECK(same_parameters(m, copy));
  }

  TEST_CASE("payload sizes") {
    const Model m = random_model(9);
    const auto r16 = quantized_size(m, auto_spec(m, 16));
    CHECK(r16.payload_bytes * 2 == r16.float_payload_bytes);
    CHECK(r16.payload_ratio == 0.5);
    CHECK(r16.header_bytes > 0);
    const auto r14 = quantized_size(m, auto_spec(m, 14));
    CHECK(r14.payload_bytes == (m.param_count() * 14 + 7) / 8);
    CHECK(r14.header_bytes == r16.header_bytes);
  }

  TEST_CASE("deviation report") {
    std::mt19937_64 rng(10);
    const Model m = random_model(11, 0.25);
    std::vector<Tensor> probe, raw;
    std::normal_distribution<float> noise(0, 0.02f);
    for (int i = 0; i < 3; ++i) {
      probe.push_back(testing::random_frame(Shape{3, 8, 8}, rng));
      raw.push_back(enhance_frame(m, probe.back()));
      for (auto& v : raw.back().values()) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
    }
    const auto same = quantization_deviation(m, m, probe, raw);
    CHECK(same.output_max == 0);
    CHECK(*same.mae_max == 0);
    CHECK(same.within_gate);
    const auto q2 = quantization_deviation(m, quantize_model(m, auto_spec(m, 2)), probe, raw);
    CHECK_FALSE(q2.within_gate);
    CHECK(q2.output_mean > 0.01);
    const auto q16 = quantization_deviation(m, quantize_model(m, auto_spec(m, 16)), probe, raw);
    CHECK(q16.output_mean < q2.output_mean);
    ModelConfig other = small();
    other.kernel = 5;
    CHECK_THROWS_AS(quantization_deviation(m, Model(other), probe), ConfigError);
  }
}

TEST_SUITE("enhance") {
  TEST_CASE("residual application clamps") {
    Tensor f(Shape{1, 1, 2}, std::vector<float>{0.9f, 0.6f});
    Tensor r(Shape{1, 1, 2}, std::vector<float>{0.2f, -0.1f});
    const auto out = apply_residual(f, r);
    CHECK(out[0] == 1.0f);
    CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("zero-initialized models make every variant the identity") {
    std::mt19937_64 rng(12);
    auto m = std::make_shared<const Model>(small());
    FrameSequence s;
    for (int i = 0; i < 5; ++i) s.frames.push_back(testing::random_frame(Shape{3, 8, 12}, rng));
    CHECK(enhance_frame(*m, s.frames[0]) == s.frames[0]);
    CHECK(enhance_sequence(Enhancer(Variant::Base, {m}), s).frames == s.frames);
    CHECK(enhance_sequence(Enhancer(Variant::Sequential, {m}), s).frames == s.frames);
    CHECK(enhance_sequence(Enhancer(Variant::Diffusion, {m, m, m}), s, {}, 2).frames == s.frames);
  }

  TEST_CASE("variant model counts are enforced") {
    auto m = std::make_shared<const Model>(small());
    CHECK_THROWS_AS(Enhancer(Variant::Diffusion, {m, m}), ConfigError);
    CHECK_THROWS_AS(Enhancer(Variant::Base, {m, m}), ConfigError);
    CHECK_THROWS_AS(parse_variant("cascade"), ConfigError);
    CHECK(parse_variant("sequential") == Variant::Sequential);
  }

  TEST_CASE("sequence errors") {
    auto m = std::make_shared<const Model>(small());
    const Enhancer e(Variant::Base, {m});
    CHECK_THROWS_AS(enhance_sequence(e, FrameSequence{}), PreconditionError);
    FrameSequence s{{Tensor(Shape{3, 8, 8}), Tensor(Shape{3, 8, 8}), Tensor(Shape{3, 8, 12})}, 6, "x"};
    CHECK_THROWS_WITH_AS(enhance_sequence(e, s), doctest::Contains("frame 2"), ShapeError);
    FrameSequence bad{{Tensor(Shape{3, 8, 7})}, 6, "x"};
    CHECK_THROWS_AS(enhance_sequence(e, bad), ShapeError);
  }

  TEST_CASE("diffusion composes three enhance_frame stages") {
    std::mt19937_64 rng(13);
    auto a = std::make_shared<const Model>(random_model(20, 0.3));
    auto b = std::make_shared<const Model>(random_model(21, 0.3));
    auto c = std::make_shared<const Model>(random_model(22, 0.3));
    auto zero = std::make_shared<const Model>(small());
    FrameSequence s;
    for (int i = 0; i < 3; ++i) s.frames.push_back(testing::random_frame(Shape{3, 8, 8}, rng));
    const auto out = enhance_sequence(Enhancer(Variant::Diffusion, {a, b, c}), s, {}, 3);
    for (std::size_t i = 0; i < s.frames.size(); ++i)
      CHECK(out.frames[i] == enhance_frame(*c, enhance_frame(*b, enhance_frame(*a, s.frames[i]))));
    const auto only_first = enhance_sequence(Enhancer(Variant::Diffusion, {a, zero, zero}), s);
    CHECK(only_first.frames == enhance_sequence(Enhancer(Variant::Base, {a}), s).frames);
  }

  TEST_CASE("sequential feedback follows the residual recurrence") {
    std::mt19937_64 rng(14);
    auto m = std::make_shared<const Model>(random_model(23, 0.3));
    FrameSequence s;
    for (int i = 0; i < 4; ++i) s.frames.push_back(testing::random_frame(Shape{3, 8, 8}, rng));
    const auto out = enhance_sequence(Enhancer(Variant::Sequential, {m}), s);
    ResidualTensor prev;
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      const Tensor input = t == 0 ? s.frames[t] : apply_residual(s.frames[t], prev);
      prev = m->forward(input);
      CHECK(out.frames[t] == apply_residual(input, prev));
    }
    const auto single = enhance_sequence(Enhancer(Variant::Sequential, {m}), FrameSequence{{s.frames[0]}, 6, ""});
    CHECK(single.frames[0] == enhance_frame(*m, s.frames[0]));
    const std::vector<bool> all(4, true);
    CHECK(enhance_sequence(Enhancer(Variant::Sequential, {m}), s, all).frames ==
          enhance_sequence(Enhancer(Variant::Base, {m}), s).frames);
    CHECK_THROWS_AS(enhance_sequence(Enhancer(Variant::Sequential, {m}), s, std::vector<bool>(3)), ConfigError);
  }

  TEST_CASE("only the base variant commutes with frame permutations") {
    std::mt19937_64 rng(15);
    auto m = std::make_shared<const Model>(random_model(24, 0.5));
    FrameSequence s;
    for (int i = 0; i < 4; ++i) s.frames.push_back(testing::random_frame(Shape{3, 8, 8}, rng));
    FrameSequence rev = s;
    std::reverse(rev.frames.begin(), rev.frames.end());
    auto base = enhance_sequence(Enhancer(Variant::Base, {m}), rev).frames;
    auto base_fwd = enhance_sequence(Enhancer(Variant::Base, {m}), s).frames;
    std::reverse(base_fwd.begin(), base_fwd.end());
    CHECK(base == base_fwd);
    auto seq = enhance_sequence(Enhancer(Variant::Sequential, {m}), rev).frames;
    auto seq_fwd = enhance_sequence(Enhancer(Variant::Sequential, {m}), s).frames;
    std::reverse(seq_fwd.begin(), seq_fwd.end());
    CHECK(seq != seq_fwd);
  }

  TEST_CASE("enhanced pixels stay in range and threads do not change results") {
    std::mt19937_64 rng(16);
    auto m = std::make_shared<const Model>(random_model(25, 2.0));
    FrameSequence s;
    for (int i = 0; i < 6; ++i) s.frames.push_back(testing::random_frame(Shape{3, 8, 8}, rng));
    for (auto v : {Variant::Base, Variant::Sequential}) {
      const auto out = enhance_sequence(Enhancer(v, {m}), s, {}, 4);
      CHECK(out.frames == enhance_sequence(Enhancer(v, {m}), s, {}, 1).frames);
      for (const auto& f : out.frames)
        for (float x : f.values()) REQUIRE((x >= 0.0f && x <= 1.0f));
    }
  }
}
