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

#include "model_config.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "error.hpp"

namespace nuclass {

namespace {

constexpr int kEncoderBlocks = 6;
constexpr int kBottleneckBlocks = 8;
constexpr int kDecoderBlocks = 6;
constexpr int kFinalBlocks = 5;
constexpr int kConvsPerBlock = 4;
constexpr int kDownsamplingStages = 2;

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw ConfigError(fmt::format("invalid model config field '{}': {}", field, why));
}

ConvSpec body_conv(int in, int out, int kernel) {
  return ConvSpec{in, out, kernel, 1, (kernel - 1) / 2, false, true, true, false};
}

ResidualBlockSpec residual_block(int channels, int kernel) {
  ResidualBlockSpec r;
  r.channels = channels;
  r.convs = {body_conv(channels, channels, kernel), body_conv(channels, channels, kernel)};
  r.convs[1].activated = false;
  return r;
}

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
long ceil_div(long a, long b) { return -floor_div(-a, b); }

Interval back_through(const ConvGeometry& g, Interval out) {
  if (!g.transpose)
    return {g.stride * out.lo - g.padding, g.stride * out.hi - g.padding + g.kernel - 1};
  // Transposed stride-s: zero-interleave the input, then correlate with
  // padding k-1-p. Only interleaved positions carry input samples.
  const long pad = g.kernel - 1 - g.padding;
  return {ceil_div(out.lo - pad, g.stride), floor_div(out.hi - pad + g.kernel - 1, g.stride)};
}

ConvGeometry geometry(const ConvSpec& s) { return {s.kernel, s.stride, s.padding, s.transpose}; }

Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

Interval back_through_chain(const std::vector<ConvSpec>& convs, Interval out) {
  for (auto it = convs.rbegin(); it != convs.rend(); ++it) out = back_through(geometry(*it), out);
  return out;
}

Interval back_through_residual(const ResidualBlockSpec& r, Interval out) {
  return hull(out, back_through_chain(r.convs, out));
}

void validate_conv(const ConvSpec& c, const std::string& where) {
  auto bad = [&](const std::string& why) { throw ConfigError(fmt::format("{}: {}", where, why)); };
  if (c.in_channels < 1 || c.out_channels < 1) bad("channel counts must be positive");
  if (c.kernel < 1 || c.kernel % 2 == 0) bad(fmt::format("kernel must be odd, got {}", c.kernel));
  if (c.stride != 1 && c.stride != 2) bad(fmt::format("stride must be 1 or 2, got {}", c.stride));
  if (c.stride == 1 && !c.transpose && c.padding != (c.kernel - 1) / 2) bad("stride-1 padding must be (kernel-1)/2");
  if (c.transpose && c.stride != 2) bad("transposed convolutions must have stride 2");
}

}  // namespace

void validate(const ModelConfig& config) {
  require(config.image_channels >= 1, "image_channels", "must be >= 1");
  require(config.base_channels >= 1, "base_channels", "must be >= 1");
  require(config.kernel >= 1 && config.kernel % 2 == 1, "kernel", fmt::format("must be odd, got {}", config.kernel));
  require(config.encoder_blocks == kEncoderBlocks, "encoder_blocks",
          fmt::format("must be {}, got {}", kEncoderBlocks, config.encoder_blocks));
  require(config.bottleneck_blocks == kBottleneckBlocks, "bottleneck_blocks",
          fmt::format("must be {}, got {}", kBottleneckBlocks, config.bottleneck_blocks));
  require(config.decoder_blocks == kDecoderBlocks, "decoder_blocks",
          fmt::format("must be {}, got {}", kDecoderBlocks, config.decoder_blocks));
  require(config.final_blocks == kFinalBlocks, "final_blocks",
          fmt::format("must be {}, got {}", kFinalBlocks, config.final_blocks));
  const std::set<int> positions(config.downsample_positions.begin(), config.downsample_positions.end());
  require(positions.size() == config.downsample_positions.size(), "downsample_positions", "duplicate entries");
  require(static_cast<int>(positions.size()) == kDownsamplingStages, "downsample_positions",
          fmt::format("exactly {} encoder blocks must downsample", kDownsamplingStages));
  for (int p : positions)
    require(p >= 0 && p < kEncoderBlocks, "downsample_positions", fmt::format("index {} out of range", p));
  require(config.leaky_slope >= 0.0 && config.leaky_slope < 1.0, "leaky_slope", "must be in [0,1)");
}

ArchitecturePlan plan_architecture(const ModelConfig& config) {
  validate(config);
  const int k = config.kernel;
  const int pad = (k - 1) / 2;
  const std::set<int> down(config.downsample_positions.begin(), config.downsample_positions.end());

  ArchitecturePlan plan;
  plan.in_feature_map = ConvSpec{config.image_channels, config.base_channels, 1, 1, 0, false, false, false, true};

  std::vector<int> enc_in(kEncoderBlocks), enc_out(kEncoderBlocks);
  int width = config.base_channels;
  for (int i = 0; i < kEncoderBlocks; ++i) {
    NuBlockSpec block;
    block.role = BlockRole::Encoder;
    block.resamples = down.count(i) > 0;
    const int out = block.resamples ? width * 2 : width;
    enc_in[i] = width;
    enc_out[i] = out;
    block.convs.push_back(body_conv(width, out, k));
    if (block.resamples) block.convs[0].stride = 2;
    for (int c = 1; c < kConvsPerBlock; ++c) block.convs.push_back(body_conv(out, out, k));
    plan.encoder.push_back(std::move(block));
    width = out;
  }

  for (int r = 0; r < kBottleneckBlocks; ++r) plan.bottleneck.push_back(residual_block(width, k));

  for (int j = 0; j < kDecoderBlocks; ++j) {
    const int e = kEncoderBlocks - 1 - j;
    NuBlockSpec block;
    block.role = BlockRole::Decoder;
    block.resamples = down.count(e) > 0;
    block.skip_channels = enc_out[e];
    const int out = enc_in[e];
    ConvSpec first = body_conv(width + enc_out[e], out, k);
    if (block.resamples) {
      first.transpose = true;
      first.stride = 2;
      first.padding = pad;
    }
    block.convs.push_back(first);
    for (int c = 1; c < kConvsPerBlock; ++c) block.convs.push_back(body_conv(out, out, k));
    plan.decoder.push_back(std::move(block));
    plan.skip_pairs.emplace_back(e, j);
    width = out;
  }

  for (int r = 0; r < kFinalBlocks; ++r) plan.final_res.push_back(residual_block(width, k));
  plan.out_feature_map = ConvSpec{width, config.image_channels, 1, 1, 0, false, false, false, true};

  validate(plan);
  return plan;
}

void validate(const ArchitecturePlan& plan) {
  if (plan.encoder.size() != kEncoderBlocks || plan.decoder.size() != kDecoderBlocks)
    throw ConfigError("architecture must have 6 encoder and 6 decoder blocks");
  if (plan.bottleneck.size() != kBottleneckBlocks || plan.final_res.size() != kFinalBlocks)
    throw ConfigError("architecture must have 8 bottleneck and 5 final residual blocks");
  validate_conv(plan.in_feature_map, "in_feature_map");
  validate_conv(plan.out_feature_map, "out_feature_map");

  // Track channel width and resolution scale (log2 of the downsampling factor).
  int width = plan.in_feature_map.out_channels;
  int scale = 0;
  std::vector<int> enc_width(kEncoderBlocks), enc_scale(kEncoderBlocks);
  for (int i = 0; i < kEncoderBlocks; ++i) {
    const auto& b = plan.encoder[i];
    if (b.convs.size() != kConvsPerBlock) throw ConfigError(fmt::format("encoder block {} needs 4 convolutions", i));
    int resampling = 0;
    for (std::size_t c = 0; c < b.convs.size(); ++c) {
      const auto& conv = b.convs[c];
      validate_conv(conv, fmt::format("encoder.{}.conv{}", i, c));
      if (conv.transpose) throw ConfigError(fmt::format("encoder.{}.conv{}: encoder never upsamples", i, c));
      if (conv.in_channels != width) throw ConfigError(fmt::format("encoder.{}.conv{}: channel mismatch", i, c));
      if (conv.stride == 2) ++resampling, ++scale;
      width = conv.out_channels;
    }
    if (resampling > 1 || (resampling == 1) != b.resamples)
      throw ConfigError(fmt::format("encoder block {}: resampling flag disagrees with its layers", i));
    enc_width[i] = width;
    enc_scale[i] = scale;
  }
  for (std::size_t r = 0; r < plan.bottleneck.size(); ++r)
    if (plan.bottleneck[r].channels != width) throw ConfigError(fmt::format("bottleneck.{}: channel mismatch", r));
  for (std::size_t j = 0; j < plan.decoder.size(); ++j) {
    const auto& b = plan.decoder[j];
    const int e = kEncoderBlocks - 1 - static_cast<int>(j);
    if (b.convs.size() != kConvsPerBlock) throw ConfigError(fmt::format("decoder block {} needs 4 convolutions", j));
    if (b.skip_channels != enc_width[e] || enc_scale[e] != scale)
      throw ConfigError(fmt::format("skip pair encoder.{} <-> decoder.{}: channel or resolution mismatch", e, j));
    int in = width + b.skip_channels;
    int resampling = 0;
    for (std::size_t c = 0; c < b.convs.size(); ++c) {
      const auto& conv = b.convs[c];
      validate_conv(conv, fmt::format("decoder.{}.conv{}", j, c));
      if (conv.stride == 2 && !conv.transpose)
        throw ConfigError(fmt::format("decoder.{}.conv{}: decoder resamples only by transposed convolution", j, c));
      if (conv.in_channels != in) throw ConfigError(fmt::format("decoder.{}.conv{}: channel mismatch", j, c));
      if (conv.transpose) ++resampling, --scale;
      in = conv.out_channels;
    }
    if (resampling > 1 || (resampling == 1) != b.resamples)
      throw ConfigError(fmt::format("decoder block {}: resampling flag disagrees with its layers", j));
    width = in;
  }
  if (scale != 0) throw ConfigError("decoder does not restore the input resolution");
  for (std::size_t r = 0; r < plan.final_res.size(); ++r)
    if (plan.final_res[r].channels != width) throw ConfigError(fmt::format("final_res.{}: channel mismatch", r));
  if (plan.out_feature_map.in_channels != width) throw ConfigError("out_feature_map: channel mismatch");
  if (plan.out_feature_map.out_channels != plan.in_feature_map.in_channels)
    throw ConfigError("out_feature_map must restore the image channel count");
}

std::uint64_t param_count(const ConvSpec& s) {
  std::uint64_t n = static_cast<std::uint64_t>(s.in_channels) * s.out_channels * s.kernel * s.kernel;
  if (s.bias) n += s.out_channels;
  if (s.normalized) n += 2ull * s.out_channels;
  return n;
}

std::uint64_t param_count(const ModelConfig& config) {
  const auto plan = plan_architecture(config);
  std::uint64_t n = param_count(plan.in_feature_map) + param_count(plan.out_feature_map);
  for (const auto* blocks : {&plan.encoder, &plan.decoder})
    for (const auto& b : *blocks)
      for (const auto& c : b.convs) n += param_count(c);
  for (const auto* blocks : {&plan.bottleneck, &plan.final_res})
    for (const auto& r : *blocks)
      for (const auto& c : r.convs) n += param_count(c);
  return n;
}

nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"image_channels", c.image_channels},
                        {"base_channels", c.base_channels},
                        {"kernel", c.kernel},
                        {"encoder_blocks", c.encoder_blocks},
                        {"bottleneck_blocks", c.bottleneck_blocks},
                        {"decoder_blocks", c.decoder_blocks},
                        {"final_blocks", c.final_blocks},
                        {"downsample_positions", c.downsample_positions},
                        {"leaky_slope", c.leaky_slope},
                        {"seed", c.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "image_channels") c.image_channels = value.get<int>();
      else if (key == "base_channels") c.base_channels = value.get<int>();
      else if (key == "kernel") c.kernel = value.get<int>();
      else if (key == "encoder_blocks") c.encoder_blocks = value.get<int>();
      else if (key == "bottleneck_blocks") c.bottleneck_blocks = value.get<int>();
      else if (key == "decoder_blocks") c.decoder_blocks = value.get<int>();
      else if (key == "final_blocks") c.final_blocks = value.get<int>();
      else if (key == "downsample_positions") c.downsample_positions = value.get<std::vector<int>>();
      else if (key == "leaky_slope") c.leaky_slope = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError(fmt::format("unknown model config field '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed model config: {}", e.what()));
  }
  validate(c);
  return c;
}

Interval dependency_interval(const std::vector<ConvGeometry>& chain, long out) {
  Interval iv{out, out};
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) iv = back_through(*it, iv);
  return iv;
}

Interval dependency_interval(const ArchitecturePlan& plan, long out) {
  Interval iv{out, out};
  iv = back_through(geometry(plan.out_feature_map), iv);
  for (auto it = plan.final_res.rbegin(); it != plan.final_res.rend(); ++it) iv = back_through_residual(*it, iv);

  // Decoder block j consumes concat(previous, encoder[5-j]); record what each
  // encoder output must supply through its skip.
  std::vector<Interval> skip(plan.encoder.size());
  std::vector<bool> has_skip(plan.encoder.size(), false);
  for (int j = static_cast<int>(plan.decoder.size()) - 1; j >= 0; --j) {
    iv = back_through_chain(plan.decoder[j].convs, iv);
    const int e = static_cast<int>(plan.encoder.size()) - 1 - j;
    skip[e] = iv;
    has_skip[e] = true;
  }
  for (auto it = plan.bottleneck.rbegin(); it != plan.bottleneck.rend(); ++it) iv = back_through_residual(*it, iv);
  for (int i = static_cast<int>(plan.encoder.size()) - 1; i >= 0; --i) {
    if (has_skip[i]) iv = hull(iv, skip[i]);
    iv = back_through_chain(plan.encoder[i].convs, iv);
  }
  return back_through(geometry(plan.in_feature_map), iv);
}

long receptive_field(const std::vector<ConvGeometry>& chain) {
  long period = 1;
  for (const auto& g : chain)
    if (g.stride == 2) period *= 2;
  long best = 0;
  for (long o = 0; o < period; ++o) best = std::max(best, dependency_interval(chain, o).width());
  return best;
}

long receptive_field(const ModelConfig& config) {
  const auto plan = plan_architecture(config);
  long best = 0;
  for (long o = 0; o < config.size_divisor(); ++o) best = std::max(best, dependency_interval(plan, o).width());
  return best;
}

}  // namespace nuclass
