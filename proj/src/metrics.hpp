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

#ifndef NUCLASS_METRICS_HPP_
#define NUCLASS_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "enhance.hpp"
#include "tensor.hpp"

namespace nuclass {

// 10 log10(peak^2 / mse). nullopt stands for +infinity (identical inputs).
std::optional<double> psnr(const FrameTensor& x, const FrameTensor& y, double peak = 1.0);

// Mean SSIM over all valid 11x11 windows (Gaussian, sigma 1.5) of the
// BT.601 luminance, C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = 1.
// Single-channel frames are used as they are.
double ssim(const FrameTensor& x, const FrameTensor& y);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr const char* kSsimConvention = "luma BT.601, gaussian 11x11 sigma 1.5, C1=1e-4, C2=9e-4, valid windows";

struct FrameMetrics {
  std::size_t index = 0;
  double mae = 0;
  double mse = 0;
  std::optional<double> psnr_db;  // nullopt = infinite
  double ssim = 0;
};

struct MetricsReport {
  std::string a_id;
  std::string b_id;
  std::vector<FrameMetrics> per_frame;
  double mean_mae = 0;
  double mean_mse = 0;
  std::optional<double> mean_psnr_db;  // over finite frames; nullopt if none
  std::size_t infinite_psnr_count = 0;
  double mean_ssim = 0;
};

MetricsReport evaluate_pair(const FrameSequence& a, const FrameSequence& b, int jobs = 1);

struct QualityThresholds {
  double psnr_db = 30.0;
  double ssim = 0.9;
};

struct QualityFlags {
  bool psnr_ok = false;
  bool ssim_ok = false;
};

// Infinite mean PSNR (all frames identical) passes.
QualityFlags quality_gate(const MetricsReport& report, const QualityThresholds& thresholds = {});

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const QualityFlags& flags, const QualityThresholds& thresholds);
std::string to_csv(const MetricsReport& report);
// Side-by-side per-frame table of two reports over the same frames, e.g.
// compressed-vs-raw and enhanced-vs-raw.
std::string comparison_csv(const MetricsReport& baseline, const MetricsReport& candidate,
                           const std::string& baseline_name, const std::string& candidate_name);

}  // namespace nuclass

#endif  // NUCLASS_METRICS_HPP_
