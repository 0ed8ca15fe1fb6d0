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

#ifndef NUCLASS_MODEL_CONFIG_HPP_
#define NUCLASS_MODEL_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace nuclass {

// One convolution layer, optionally followed by instance normalization and a
// leaky rectifier. Transposed layers always upsample by 2.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 7;
  int stride = 1;
  int padding = 3;
  bool transpose = false;
  bool normalized = true;
  bool activated = true;
  bool bias = false;

  bool operator==(const ConvSpec&) const = default;
};

enum class BlockRole { Encoder, Decoder };

// Four convolutions; at most one of them resamples (stride-2 in the encoder,
// transposed stride-2 in the decoder).
struct NuBlockSpec {
  BlockRole role = BlockRole::Encoder;
  std::vector<ConvSpec> convs;
  bool resamples = false;
  int skip_channels = 0;  // decoder only: width concatenated from the paired encoder block
};

// G(x) = F(x) + x, F being two shape-preserving convolutions.
struct ResidualBlockSpec {
  int channels = 0;
  std::vector<ConvSpec> convs;
};

struct ModelConfig {
  int image_channels = 3;
  int base_channels = 48;
  int kernel = 7;
  int encoder_blocks = 6;
  int bottleneck_blocks = 8;
  int decoder_blocks = 6;
  int final_blocks = 5;
  std::vector<int> downsample_positions{1, 3};
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;

  // Number of stride-2 stages; frame height and width must be divisible by 2^D.
  int downsampling_stages() const { return static_cast<int>(downsample_positions.size()); }
  int size_divisor() const { return 1 << downsampling_stages(); }
};

struct ArchitecturePlan {
  ConvSpec in_feature_map;
  std::vector<NuBlockSpec> encoder;
  std::vector<ResidualBlockSpec> bottleneck;
  std::vector<NuBlockSpec> decoder;
  std::vector<ResidualBlockSpec> final_res;
  ConvSpec out_feature_map;
  // (encoder index, decoder index) pairs joined by skip connections.
  std::vector<std::pair<int, int>> skip_pairs;
};

// Throws ConfigError naming the offending field.
void validate(const ModelConfig& config);

// Expands a validated config into per-layer specs and checks the skip pairing
// (equal channel bookkeeping and equal spatial resolution on both ends).
ArchitecturePlan plan_architecture(const ModelConfig& config);
void validate(const ArchitecturePlan& plan);

// Scalar parameter count implied by a config, without allocating the model.
std::uint64_t param_count(const ModelConfig& config);
std::uint64_t param_count(const ConvSpec& spec);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Receptive field --------------------------------------------------------

struct ConvGeometry {
  int kernel = 7;
  int stride = 1;
  int padding = 3;
  bool transpose = false;
};

struct Interval {
  long lo = 0;
  long hi = 0;
  long width() const { return hi - lo + 1; }
};

// Input positions (along one axis) that output position `out` depends on,
// assuming an unbounded input.
Interval dependency_interval(const ArchitecturePlan& plan, long out);
Interval dependency_interval(const std::vector<ConvGeometry>& chain, long out);

// Width of the widest dependency interval over one full period of output
// positions (2^D positions for D stride-2 stages).
long receptive_field(const ModelConfig& config);
long receptive_field(const std::vector<ConvGeometry>& chain);

}  // namespace nuclass

#endif  // NUCLASS_MODEL_CONFIG_HPP_
