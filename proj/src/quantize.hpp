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

#ifndef NUCLASS_QUANTIZE_HPP_
#define NUCLASS_QUANTIZE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "model.hpp"

namespace nuclass {

// Symmetric fixed point: integer q in [-(2^(b-1)-1), 2^(b-1)-1] stands for q * 2^-f.
struct QuantSpec {
  int total_bits = 16;
  int frac_bits = 0;

  bool operator==(const QuantSpec&) const = default;
  std::int64_t max_code() const { return (std::int64_t{1} << (total_bits - 1)) - 1; }
  double scale() const;  // 2^f
};

void validate(const QuantSpec& spec);

// Largest f such that every parameter fits: f = b - 1 - ceil(log2(max(maxabs, 1))),
// lowered further while rounding maxabs * 2^f would overflow the code range.
int choose_frac_bits(const Model& model, int total_bits);
QuantSpec auto_spec(const Model& model, int total_bits);

// Round-to-nearest-even code for v. Throws RangeError (mentioning `what`)
// when the code is out of range.
std::int64_t quantize_code(double v, const QuantSpec& spec, const std::string& what = "value");
double dequantize_code(std::int64_t q, const QuantSpec& spec);
double quantize_value(double v, const QuantSpec& spec, const std::string& what = "value");

// Simulated quantization: a float model whose parameters all lie on the grid.
// The input model is left untouched.
Model quantize_model(const Model& model, const QuantSpec& spec);

struct SizeReport {
  std::uint64_t params = 0;
  int total_bits = 32;
  std::uint64_t payload_bytes = 0;        // ceil(params * bits / 8)
  std::uint64_t float_payload_bytes = 0;  // params * 4
  std::uint64_t header_bytes = 0;         // archive overhead, never part of the ratio
  double payload_ratio = 1.0;             // payload_bytes / float_payload_bytes
};

SizeReport quantized_size(const Model& model, const QuantSpec& spec);

struct DeviationReport {
  std::size_t frames = 0;
  // Per-frame relative L1 distance between the two models' enhanced frames.
  double output_max = 0;
  double output_mean = 0;
  // Per-frame |mae_q - mae_f| / mae_f against raw, when raw frames are given.
  std::optional<double> mae_max;
  std::optional<double> mae_mean;
  std::optional<double> float_mae;
  std::optional<double> quant_mae;
  double gate = 0.01;
  // Gate on the MAE-vs-raw deviation when available, else on outputs.
  bool within_gate = false;
};

DeviationReport quantization_deviation(const Model& model, const Model& qmodel, std::span<const FrameTensor> probe,
                                       std::span<const FrameTensor> raw = {}, double gate = 0.01, int jobs = 1);

nlohmann::json to_json(const QuantSpec& spec);
nlohmann::json to_json(const SizeReport& r);
nlohmann::json to_json(const DeviationReport& r);

}  // namespace nuclass

#endif  // NUCLASS_QUANTIZE_HPP_
