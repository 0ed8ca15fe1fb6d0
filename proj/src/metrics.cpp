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

#include "metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "error.hpp"
#include "losses.hpp"

namespace nuclass {

namespace {

std::vector<double> luminance(const FrameTensor& f) {
  const std::size_t plane = f.shape().plane();
  std::vector<double> y(plane);
  if (f.channels() == 1) {
    for (std::size_t i = 0; i < plane; ++i) y[i] = f[i];
  } else if (f.channels() == 3) {
    for (std::size_t i = 0; i < plane; ++i)
      y[i] = 0.299 * f[i] + 0.587 * f[plane + i] + 0.114 * f[2 * plane + i];
  } else {
    throw ShapeError(fmt::format("ssim needs 1 or 3 channels, got {}", f.channels()));
  }
  return y;
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable valid-mode filtering of an H x W image.
std::vector<double> filter_valid(const std::vector<double>& img, int H, int W, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int Ho = H - k + 1, Wo = W - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(H) * Wo);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < Wo; ++x) {
      double s = 0;
      for (int t = 0; t < k; ++t) s += g[t] * img[static_cast<std::size_t>(y) * W + x + t];
      rows[static_cast<std::size_t>(y) * Wo + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(Ho) * Wo);
  for (int y = 0; y < Ho; ++y)
    for (int x = 0; x < Wo; ++x) {
      double s = 0;
      for (int t = 0; t < k; ++t) s += g[t] * rows[static_cast<std::size_t>(y + t) * Wo + x];
      out[static_cast<std::size_t>(y) * Wo + x] = s;
    }
  return out;
}

}  // namespace

std::optional<double> psnr(const FrameTensor& x, const FrameTensor& y, double peak) {
  if (!(peak > 0)) throw ConfigError("psnr peak must be positive");
  const double m = mse_loss(x, y);
  if (m == 0) return std::nullopt;
  return 10.0 * std::log10(peak * peak / m);
}

double ssim(const FrameTensor& x, const FrameTensor& y) {
  require_same_shape(x.shape(), y.shape(), "ssim");
  const int H = x.height(), W = x.width();
  if (H < kSsimWindow || W < kSsimWindow)
    throw ShapeError(fmt::format("ssim needs frames of at least {}x{}, got {}", kSsimWindow, kSsimWindow,
                                 x.shape().str()));
  if (x == y) return 1.0;
  const auto a = luminance(x);
  const auto b = luminance(y);
  const auto g = gaussian_window();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, H, W, g);
  const auto mu_b = filter_valid(b, H, W, g);
  const auto s_aa = filter_valid(aa, H, W, g);
  const auto s_bb = filter_valid(bb, H, W, g);
  const auto s_ab = filter_valid(ab, H, W, g);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma, vb = s_bb[i] - mb * mb, cov = s_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

MetricsReport evaluate_pair(const FrameSequence& a, const FrameSequence& b, int jobs) {
  if (a.frames.size() != b.frames.size())
    throw ShapeError(fmt::format("sequences differ in length: {} vs {}", a.frames.size(), b.frames.size()));
  MetricsReport r;
  r.a_id = a.source_id;
  r.b_id = b.source_id;
  r.per_frame.resize(a.frames.size());
  parallel_for(a.frames.size(), jobs, [&](std::size_t i) {
    auto& m = r.per_frame[i];
    m.index = i;
    m.mae = mae_loss(a.frames[i], b.frames[i]);
    m.mse = mse_loss(a.frames[i], b.frames[i]);
    m.psnr_db = psnr(a.frames[i], b.frames[i]);
    m.ssim = ssim(a.frames[i], b.frames[i]);
  });
  if (r.per_frame.empty()) return r;
  double psnr_sum = 0;
  std::size_t finite = 0;
  for (const auto& m : r.per_frame) {
    r.mean_mae += m.mae;
    r.mean_mse += m.mse;
    r.mean_ssim += m.ssim;
    if (m.psnr_db) {
      psnr_sum += *m.psnr_db;
      ++finite;
    } else {
      ++r.infinite_psnr_count;
    }
  }
  const double n = static_cast<double>(r.per_frame.size());
  r.mean_mae /= n;
  r.mean_mse /= n;
  r.mean_ssim /= n;
  if (finite > 0) r.mean_psnr_db = psnr_sum / static_cast<double>(finite);
  return r;
}

QualityFlags quality_gate(const MetricsReport& report, const QualityThresholds& t) {
  QualityFlags f;
  if (report.per_frame.empty()) return f;
  f.psnr_ok = report.mean_psnr_db ? *report.mean_psnr_db > t.psnr_db : true;
  f.ssim_ok = report.mean_ssim > t.ssim;
  return f;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& m : r.per_frame)
    frames.push_back({{"index", m.index},
                      {"mae", m.mae},
                      {"mse", m.mse},
                      {"psnr_db", m.psnr_db ? nlohmann::json(*m.psnr_db) : nlohmann::json(nullptr)},
                      {"psnr_infinite", !m.psnr_db.has_value()},
                      {"ssim", m.ssim}});
  return {{"a", r.a_id},
          {"b", r.b_id},
          {"frames", r.per_frame.size()},
          {"per_frame", frames},
          {"mean",
           {{"mae", r.mean_mae},
            {"mse", r.mean_mse},
            {"psnr_db", r.mean_psnr_db ? nlohmann::json(*r.mean_psnr_db) : nlohmann::json(nullptr)},
            {"ssim", r.mean_ssim}}},
          {"infinite_psnr_count", r.infinite_psnr_count},
          {"psnr_peak", 1.0},
          {"ssim_convention", kSsimConvention}};
}

nlohmann::json to_json(const QualityFlags& f, const QualityThresholds& t) {
  return {{"psnr_ok", f.psnr_ok}, {"ssim_ok", f.ssim_ok}, {"psnr_threshold_db", t.psnr_db}, {"ssim_threshold", t.ssim}};
}

namespace {

std::string psnr_cell(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "inf"; }

}  // namespace

std::string to_csv(const MetricsReport& r) {
  std::string out = "index,mae,mse,psnr_db,ssim\n";
  for (const auto& m : r.per_frame)
    out += fmt::format("{},{:.8f},{:.8f},{},{:.8f}\n", m.index, m.mae, m.mse, psnr_cell(m.psnr_db), m.ssim);
  return out;
}

std::string comparison_csv(const MetricsReport& a, const MetricsReport& b, const std::string& an,
                           const std::string& bn) {
  if (a.per_frame.size() != b.per_frame.size()) throw ShapeError("comparison reports cover different frame counts");
  std::string out = fmt::format("index,{0}_mae,{1}_mae,{0}_psnr_db,{1}_psnr_db,{0}_ssim,{1}_ssim\n", an, bn);
  for (std::size_t i = 0; i < a.per_frame.size(); ++i) {
    const auto& x = a.per_frame[i];
    const auto& y = b.per_frame[i];
    out += fmt::format("{},{:.8f},{:.8f},{},{},{:.8f},{:.8f}\n", i, x.mae, y.mae, psnr_cell(x.psnr_db),
                       psnr_cell(y.psnr_db), x.ssim, y.ssim);
  }
  out += fmt::format("mean,{:.8f},{:.8f},{},{},{:.8f},{:.8f}\n", a.mean_mae, b.mean_mae, psnr_cell(a.mean_psnr_db),
                     psnr_cell(b.mean_psnr_db), a.mean_ssim, b.mean_ssim);
  return out;
}

}  // namespace nuclass
