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

#include "nuclass/nuclass.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "checkpoint.hpp"
#include "dataset.hpp"
#include "enhance.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "quantize.hpp"
#include "train.hpp"

struct nc_model {
  std::shared_ptr<nuclass::Model> model;
  std::optional<nuclass::QuantSpec> quant;
};

struct nc_frames {
  nuclass::FrameSequence seq;
};

struct nc_dataset {
  nuclass::DatasetManifest manifest;
};

namespace {

using namespace nuclass;

thread_local std::string g_last_error;

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nc_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return NC_CONFIG_ERROR;
    case ErrorKind::Shape: return NC_SHAPE_ERROR;
    case ErrorKind::Io: return NC_IO_ERROR;
    case ErrorKind::Range: return NC_RANGE_ERROR;
    case ErrorKind::Environment: return NC_ENVIRONMENT_ERROR;
    case ErrorKind::Alignment: return NC_ALIGNMENT_ERROR;
    case ErrorKind::Stale: return NC_STALE_ERROR;
    case ErrorKind::Precondition: return NC_PRECONDITION_ERROR;
    case ErrorKind::Numeric: return NC_NUMERIC_ERROR;
  }
  return NC_INTERNAL_ERROR;
}

// Runs fn, translating exceptions into status codes and the thread's last error.
template <class Fn>
nc_status guard(Fn&& fn) noexcept {
  g_last_error.clear();
  try {
    fn();
    return NC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const ArgumentError& e) {
    g_last_error = e.what();
    return NC_INVALID_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = fmt::format("invalid JSON: {}", e.what());
    return NC_CONFIG_ERROR;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return NC_IO_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NC_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NC_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return NC_INTERNAL_ERROR;
  }
}

template <class T>
T& require(T* p, const char* what) {
  if (!p) throw ArgumentError(fmt::format("{} is null", what));
  return *p;
}

const char* text(const char* p, const char* what) {
  if (!p) throw ArgumentError(fmt::format("{} is null", what));
  return p;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

nlohmann::json parse_json(const char* text, const char* what) {
  if (!text || !*text) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

Shape frame_shape(int c, int h, int w) {
  if (c <= 0 || h <= 0 || w <= 0) throw ArgumentError(fmt::format("invalid frame shape {}x{}x{}", c, h, w));
  return Shape{c, h, w};
}

FrameTensor frame_from(const float* data, const Shape& s) {
  if (!data) throw ArgumentError("frame data is null");
  FrameTensor f(s);
  std::memcpy(f.values().data(), data, f.values().size() * sizeof(float));
  return f;
}

Split parse_split(const char* s) {
  if (!s) throw ArgumentError("split is null");
  if (std::strcmp(s, "train") == 0) return Split::Train;
  if (std::strcmp(s, "test") == 0) return Split::Test;
  throw ArgumentError(fmt::format("unknown split '{}' (expected train or test)", s));
}

nlohmann::json quality_json(const MetricsReport& r) {
  const QualityThresholds t;
  nlohmann::json j = to_json(r);
  j["quality_gate"] = to_json(quality_gate(r, t), t);
  return j;
}

std::vector<Model*> model_list(nc_model* const* models, std::size_t n) {
  if (!models && n) throw ArgumentError("models is null");
  std::vector<Model*> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(require(models[i], "model").model.get());
  return out;
}

TrainReport run_training(const std::vector<Model*>& models, const TrainData& data, const TrainConfig& cfg) {
  if (cfg.variant == Variant::Diffusion) {
    if (models.size() != kDiffusionStages)
      throw ConfigError(fmt::format("diffusion training needs {} models, got {}", kDiffusionStages, models.size()));
    return train_diffusion({models[0], models[1], models[2]}, data, cfg);
  }
  if (models.size() != 1)
    throw ConfigError(fmt::format("{} training needs 1 model, got {}", to_string(cfg.variant), models.size()));
  return cfg.variant == Variant::Base ? train_base(*models[0], data, cfg) : train_sequential(*models[0], data, cfg);
}

}  // namespace

extern "C" {

const char* nc_version(void) { return NUCLASS_VERSION; }

const char* nc_status_string(nc_status status) {
  switch (status) {
    case NC_OK: return "ok";
    case NC_CONFIG_ERROR: return "configuration error";
    case NC_SHAPE_ERROR: return "shape error";
    case NC_IO_ERROR: return "I/O error";
    case NC_RANGE_ERROR: return "range error";
    case NC_ENVIRONMENT_ERROR: return "environment error";
    case NC_ALIGNMENT_ERROR: return "alignment error";
    case NC_STALE_ERROR: return "stale data";
    case NC_PRECONDITION_ERROR: return "precondition failed";
    case NC_NUMERIC_ERROR: return "numeric error";
    case NC_INVALID_ARGUMENT: return "invalid argument";
    case NC_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* nc_last_error(void) { return g_last_error.c_str(); }

void nc_free_string(char* s) { std::free(s); }

nc_status nc_set_log_level(const char* level) {
  return guard([&] {
    const auto lvl = spdlog::level::from_str(text(level, "level"));
    if (lvl == spdlog::level::off && std::strcmp(level, "off") != 0)
      throw ArgumentError(fmt::format("unknown log level '{}'", level));
    spdlog::set_level(lvl);
  });
}

nc_status nc_model_create(const char* config_json, nc_model** out) {
  return guard([&] {
    require(out, "out");
    const ModelConfig cfg = model_config_from_json(parse_json(config_json, "model config"));
    *out = new nc_model{std::make_shared<Model>(cfg), std::nullopt};
  });
}

nc_status nc_model_load(const char* path, nc_model** out, char** quant_json) {
  return guard([&] {
    require(out, "out");
    std::optional<QuantSpec> q;
    auto m = std::make_shared<Model>(load_checkpoint(text(path, "path"), &q));
    put(quant_json, q ? to_json(*q).dump() : "null");
    *out = new nc_model{std::move(m), q};
  });
}

nc_status nc_model_save(const nc_model* model, const char* path) {
  return guard([&] {
    const auto& m = require(model, "model");
    save_checkpoint(*m.model, text(path, "path"), m.quant);
  });
}

nc_status nc_model_info(const nc_model* model, char** json) {
  return guard([&] {
    const auto& m = require(model, "model");
    const auto& plan = m.model->plan();
    auto count_resampling = [](const std::vector<NuBlockSpec>& blocks) {
      int n = 0;
      for (const auto& b : blocks) n += b.resamples;
      return n;
    };
    nlohmann::json j = {{"config", to_json(m.model->config())},
                        {"param_count", m.model->param_count()},
                        {"receptive_field", receptive_field(m.model->config())},
                        {"size_divisor", m.model->config().size_divisor()},
                        {"encoder_blocks", plan.encoder.size()},
                        {"decoder_blocks", plan.decoder.size()},
                        {"bottleneck_residual_blocks", plan.bottleneck.size()},
                        {"final_residual_blocks", plan.final_res.size()},
                        {"downsampling_stages", count_resampling(plan.encoder)},
                        {"upsampling_stages", count_resampling(plan.decoder)},
                        {"layers", m.model->layer_count()}};
    j["quantization"] = m.quant ? to_json(*m.quant) : nlohmann::json(nullptr);
    put(json, j.dump());
  });
}

nc_status nc_model_forward(const nc_model* model, const float* frame, int channels, int height, int width,
                           float* residual) {
  return guard([&] {
    const auto& m = require(model, "model");
    require(residual, "residual");
    const auto r = m.model->forward(frame_from(frame, frame_shape(channels, height, width)));
    std::memcpy(residual, r.values().data(), r.values().size() * sizeof(float));
  });
}

void nc_model_free(nc_model* model) { delete model; }

nc_status nc_frames_create(size_t count, int channels, int height, int width, const float* data, nc_frames** out) {
  return guard([&] {
    require(out, "out");
    const Shape s = frame_shape(channels, height, width);
    if (count && !data) throw ArgumentError("data is null");
    auto f = std::make_unique<nc_frames>();
    const std::size_t n = static_cast<std::size_t>(channels) * height * width;
    for (std::size_t i = 0; i < count; ++i) f->seq.frames.push_back(frame_from(data + i * n, s));
    *out = f.release();
  });
}

nc_status nc_frames_read_dir(const char* dir, nc_frames** out) {
  return guard([&] {
    require(out, "out");
    auto f = std::make_unique<nc_frames>();
    f->seq = read_frame_directory(text(dir, "dir"));
    *out = f.release();
  });
}

nc_status nc_frames_write_dir(const nc_frames* frames, const char* dir) {
  return guard([&] { reassemble_video(require(frames, "frames").seq, text(dir, "dir")); });
}

nc_status nc_frames_count(const nc_frames* frames, size_t* count) {
  return guard([&] { require(count, "count") = require(frames, "frames").seq.frames.size(); });
}

nc_status nc_frames_shape(const nc_frames* frames, size_t index, int* channels, int* height, int* width) {
  return guard([&] {
    const auto& seq = require(frames, "frames").seq;
    if (index >= seq.frames.size())
      throw ArgumentError(fmt::format("frame index {} out of range ({} frames)", index, seq.frames.size()));
    const Shape s = seq.frames[index].shape();
    if (channels) *channels = s.channels;
    if (height) *height = s.height;
    if (width) *width = s.width;
  });
}

nc_status nc_frames_copy(const nc_frames* frames, size_t index, float* out) {
  return guard([&] {
    const auto& seq = require(frames, "frames").seq;
    require(out, "out");
    if (index >= seq.frames.size())
      throw ArgumentError(fmt::format("frame index {} out of range ({} frames)", index, seq.frames.size()));
    const auto v = seq.frames[index].values();
    std::memcpy(out, v.data(), v.size() * sizeof(float));
  });
}

void nc_frames_free(nc_frames* frames) { delete frames; }

nc_status nc_enhance(const char* variant, const nc_model* const* models, size_t n_models, const nc_frames* input,
                     const unsigned char* resets, int jobs, nc_frames** out) {
  return guard([&] {
    require(out, "out");
    const auto& in = require(input, "input").seq;
    if (!models && n_models) throw ArgumentError("models is null");
    std::vector<std::shared_ptr<const Model>> list;
    for (std::size_t i = 0; i < n_models; ++i) list.push_back(require(models[i], "model").model);
    const Enhancer enhancer(parse_variant(text(variant, "variant")), std::move(list));
    std::vector<bool> flags;
    if (resets) flags.assign(resets, resets + in.frames.size());
    auto f = std::make_unique<nc_frames>();
    f->seq = enhance_sequence(enhancer, in, flags, jobs);
    *out = f.release();
  });
}

nc_status nc_frame_metrics(const float* a, const float* b, int channels, int height, int width, double* psnr_db,
                           double* ssim_value) {
  return guard([&] {
    const Shape s = frame_shape(channels, height, width);
    const auto x = frame_from(a, s), y = frame_from(b, s);
    if (psnr_db) *psnr_db = psnr(x, y).value_or(std::numeric_limits<double>::infinity());
    if (ssim_value) *ssim_value = ssim(x, y);
  });
}

nc_status nc_evaluate(const nc_frames* a, const nc_frames* b, int jobs, char** json, char** csv) {
  return guard([&] {
    const auto r = evaluate_pair(require(a, "a").seq, require(b, "b").seq, jobs);
    put(json, quality_json(r).dump());
    put(csv, to_csv(r));
  });
}

nc_status nc_compare(const nc_frames* compressed, const nc_frames* enhanced, const nc_frames* raw, int jobs,
                     char** json, char** csv) {
  return guard([&] {
    const auto& r = require(raw, "raw").seq;
    const auto base = evaluate_pair(require(compressed, "compressed").seq, r, jobs);
    const auto cand = evaluate_pair(require(enhanced, "enhanced").seq, r, jobs);
    nlohmann::json j = {{"compressed_vs_raw", quality_json(base)},
                        {"enhanced_vs_raw", quality_json(cand)},
                        {"ssim_convention", kSsimConvention}};
    if (base.mean_mae > 0) j["mae_ratio"] = cand.mean_mae / base.mean_mae;
    put(json, j.dump());
    put(csv, comparison_csv(base, cand, "compressed", "enhanced"));
  });
}

nc_status nc_dataset_build(const char* config_json, nc_dataset** out) {
  return guard([&] {
    require(out, "out");
    const auto cfg = extraction_config_from_json(parse_json(config_json, "dataset config"));
    *out = new nc_dataset{build_dataset(cfg)};
  });
}

nc_status nc_dataset_open(const char* manifest_path, nc_dataset** out) {
  return guard([&] {
    require(out, "out");
    *out = new nc_dataset{read_manifest(text(manifest_path, "manifest_path"))};
  });
}

nc_status nc_dataset_manifest(const nc_dataset* dataset, char** json) {
  return guard([&] { put(json, to_json(require(dataset, "dataset").manifest).dump()); });
}

nc_status nc_dataset_bitrates(const nc_dataset* dataset, char** json, char** table) {
  return guard([&] {
    const auto r = summarize_bitrates(require(dataset, "dataset").manifest);
    put(json, to_json(r).dump());
    put(table, format_table(r));
  });
}

nc_status nc_dataset_load(const nc_dataset* dataset, const char* split, int jobs, nc_frames** compressed,
                          nc_frames** raw) {
  return guard([&] {
    require(compressed, "compressed");
    require(raw, "raw");
    const auto& m = require(dataset, "dataset").manifest;
    PairedFrames p = load_pairs(m, parse_split(split), jobs);
    auto c = std::make_unique<nc_frames>(), r = std::make_unique<nc_frames>();
    c->seq.frames = std::move(p.compressed);
    r->seq.frames = std::move(p.raw);
    c->seq.fps = r->seq.fps = m.config.sample_fps;
    *compressed = c.release();
    *raw = r.release();
  });
}

void nc_dataset_free(nc_dataset* dataset) { delete dataset; }

nc_status nc_train(nc_model* const* models, size_t n_models, const nc_dataset* dataset, const char* config_json,
                   char** report_json, char** curve_csv) {
  return guard([&] {
    const auto list = model_list(models, n_models);
    const auto cfg = train_config_from_json(parse_json(config_json, "train config"));
    const auto data = load_train_data(require(dataset, "dataset").manifest, cfg.jobs);
    const auto report = run_training(list, data, cfg);
    put(report_json, to_json(report).dump());
    put(curve_csv, loss_csv(report));
  });
}

nc_status nc_train_frames(nc_model* const* models, size_t n_models, const nc_frames* train_compressed,
                          const nc_frames* train_raw, const nc_frames* test_compressed, const nc_frames* test_raw,
                          const char* config_json, char** report_json, char** curve_csv) {
  return guard([&] {
    const auto list = model_list(models, n_models);
    const auto cfg = train_config_from_json(parse_json(config_json, "train config"));
    TrainData data;
    data.train.compressed = require(train_compressed, "train_compressed").seq.frames;
    data.train.raw = require(train_raw, "train_raw").seq.frames;
    data.test.compressed = require(test_compressed, "test_compressed").seq.frames;
    data.test.raw = require(test_raw, "test_raw").seq.frames;
    const auto report = run_training(list, data, cfg);
    put(report_json, to_json(report).dump());
    put(curve_csv, loss_csv(report));
  });
}

nc_status nc_quantize(const nc_model* model, int total_bits, int frac_bits, nc_model** out, char** report_json) {
  return guard([&] {
    require(out, "out");
    const auto& m = require(model, "model");
    QuantSpec spec;
    if (frac_bits < 0) {
      spec = auto_spec(*m.model, total_bits);
    } else {
      spec = {total_bits, frac_bits};
      validate(spec);
    }
    auto q = std::make_shared<Model>(quantize_model(*m.model, spec));
    put(report_json, nlohmann::json{{"spec", to_json(spec)}, {"size", to_json(quantized_size(*q, spec))}}.dump());
    *out = new nc_model{std::move(q), spec};
  });
}

nc_status nc_quantization_deviation(const nc_model* model, const nc_model* quantized, const nc_frames* probe,
                                    const nc_frames* raw, double gate, int jobs, char** json) {
  return guard([&] {
    const auto& probe_frames = require(probe, "probe").seq.frames;
    std::span<const FrameTensor> raw_frames;
    if (raw) raw_frames = raw->seq.frames;
    const auto r = quantization_deviation(*require(model, "model").model, *require(quantized, "quantized").model,
                                          probe_frames, raw_frames, gate, jobs);
    put(json, to_json(r).dump());
  });
}

}  // extern "C"
