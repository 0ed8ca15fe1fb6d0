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

#include "quantize.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "checkpoint.hpp"
#include "enhance.hpp"
#include "error.hpp"
#include "losses.hpp"

namespace nuclass {

double QuantSpec::scale() const { return std::ldexp(1.0, frac_bits); }

void validate(const QuantSpec& spec) {
  if (spec.total_bits < 2 || spec.total_bits > 32)
    throw ConfigError(fmt::format("total_bits must be in [2,32], got {}", spec.total_bits));
  if (spec.frac_bits < 0 || spec.frac_bits >= spec.total_bits)
    throw ConfigError(fmt::format("frac_bits must be in [0,{}), got {}", spec.total_bits, spec.frac_bits));
}

namespace {

double max_abs_parameter(const Model& model) {
  double m = 0;
  for (const auto& p : model.parameters())
    for (float v : p.values) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

}  // namespace

int choose_frac_bits(const Model& model, int total_bits) {
  if (total_bits < 2 || total_bits > 32)
    throw ConfigError(fmt::format("total_bits must be in [2,32], got {}", total_bits));
  const double maxabs = max_abs_parameter(model);
  int f = total_bits - 1 - static_cast<int>(std::ceil(std::log2(std::max(maxabs, 1.0))));
  const double max_code = std::ldexp(1.0, total_bits - 1) - 1;
  while (f > 0 && std::nearbyint(maxabs * std::ldexp(1.0, f)) > max_code) --f;
  if (f < 0 || std::nearbyint(maxabs * std::ldexp(1.0, f)) > max_code)
    throw RangeError(fmt::format("{} bits cannot represent parameter magnitude {}", total_bits, maxabs));
  return f;
}

QuantSpec auto_spec(const Model& model, int total_bits) { return {total_bits, choose_frac_bits(model, total_bits)}; }

std::int64_t quantize_code(double v, const QuantSpec& spec, const std::string& what) {
  if (!std::isfinite(v)) throw RangeError(fmt::format("{} is not finite", what));
  const double q = std::nearbyint(v * spec.scale());
  const double lim = static_cast<double>(spec.max_code());
  if (q > lim || q < -lim)
    throw RangeError(fmt::format("{} value {} exceeds the {}-bit range with {} fractional bits (|v| <= {})", what, v,
                                 spec.total_bits, spec.frac_bits, lim / spec.scale()));
  return static_cast<std::int64_t>(q);
}

double dequantize_code(std::int64_t q, const QuantSpec& spec) { return static_cast<double>(q) / spec.scale(); }

double quantize_value(double v, const QuantSpec& spec, const std::string& what) {
  return dequantize_code(quantize_code(v, spec, what), spec);
}

Model quantize_model(const Model& model, const QuantSpec& spec) {
  validate(spec);
  Model out = model;
  for (auto& p : out.parameters())
    for (auto& v : p.values) v = static_cast<float>(quantize_value(v, spec, fmt::format("tensor '{}'", p.name)));
  return out;
}

SizeReport quantized_size(const Model& model, const QuantSpec& spec) {
  validate(spec);
  SizeReport r;
  r.params = model.param_count();
  r.total_bits = spec.total_bits;
  r.payload_bytes = (r.params * static_cast<std::uint64_t>(spec.total_bits) + 7) / 8;
  r.float_payload_bytes = r.params * 4;
  r.payload_ratio = r.float_payload_bytes ? static_cast<double>(r.payload_bytes) / r.float_payload_bytes : 1.0;
  // Header overhead of the quantized archive: everything except the packed tensors.
  ArchiveStats stats;
  serialize_checkpoint(quantize_model(model, spec), spec, &stats);
  r.header_bytes = stats.header_bytes();
  return r;
}

DeviationReport quantization_deviation(const Model& model, const Model& qmodel, std::span<const FrameTensor> probe,
                                       std::span<const FrameTensor> raw, double gate, int jobs) {
  if (model.config() != qmodel.config()) throw ConfigError("quantization_deviation: model configs differ");
  if (probe.empty()) throw PreconditionError("quantization_deviation: empty probe set");
  if (!raw.empty() && raw.size() != probe.size())
    throw ShapeError(fmt::format("probe has {} frames but {} raw frames were given", probe.size(), raw.size()));
  const std::size_t n = probe.size();
  std::vector<double> out_dev(n), mae_f(n), mae_q(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const FrameTensor ef = enhance_frame(model, probe[i]);
    const FrameTensor eq = enhance_frame(qmodel, probe[i]);
    double diff = 0, norm = 0;
    for (std::size_t j = 0; j < ef.size(); ++j) {
      diff += std::abs(static_cast<double>(eq[j]) - ef[j]);
      norm += std::abs(static_cast<double>(ef[j]));
    }
    out_dev[i] = norm > 0 ? diff / norm : (diff > 0 ? 1.0 : 0.0);
    if (!raw.empty()) {
      mae_f[i] = mae_loss(ef, raw[i]);
      mae_q[i] = mae_loss(eq, raw[i]);
    }
  });
  DeviationReport r;
  r.frames = n;
  r.gate = gate;
  for (double d : out_dev) {
    r.output_max = std::max(r.output_max, d);
    r.output_mean += d / static_cast<double>(n);
  }
  if (!raw.empty()) {
    double mx = 0, mean = 0, sf = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = mae_f[i] > 0 ? std::abs(mae_q[i] - mae_f[i]) / mae_f[i] : (mae_q[i] > 0 ? 1.0 : 0.0);
      mx = std::max(mx, d);
      mean += d / static_cast<double>(n);
      sf += mae_f[i] / static_cast<double>(n);
      sq += mae_q[i] / static_cast<double>(n);
    }
    r.mae_max = mx;
    r.mae_mean = mean;
    r.float_mae = sf;
    r.quant_mae = sq;
    r.within_gate = mean <= gate;
  } else {
    r.within_gate = r.output_mean <= gate;
  }
  return r;
}

nlohmann::json to_json(const QuantSpec& s) { return {{"total_bits", s.total_bits}, {"frac_bits", s.frac_bits}}; }

nlohmann::json to_json(const SizeReport& r) {
  return {{"params", r.params},
          {"total_bits", r.total_bits},
          {"payload_bytes", r.payload_bytes},
          {"float_payload_bytes", r.float_payload_bytes},
          {"header_bytes", r.header_bytes},
          {"payload_ratio", r.payload_ratio}};
}

nlohmann::json to_json(const DeviationReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"frames", r.frames},
          {"output_relative_l1", {{"max", r.output_max}, {"mean", r.output_mean}}},
          {"mae_vs_raw_relative", {{"max", opt(r.mae_max)}, {"mean", opt(r.mae_mean)}}},
          {"float_mae", opt(r.float_mae)},
          {"quantized_mae", opt(r.quant_mae)},
          {"gate", r.gate},
          {"gate_metric", r.mae_mean ? "mae_vs_raw_relative.mean" : "output_relative_l1.mean"},
          {"within_gate", r.within_gate}};
}

}  // namespace nuclass
