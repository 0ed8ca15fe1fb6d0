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

// nuclass command-line driver. Everything goes through the C interface.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nuclass/nuclass.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(nc_status s) {
  switch (s) {
    case NC_CONFIG_ERROR:
    case NC_SHAPE_ERROR:
    case NC_RANGE_ERROR:
    case NC_ALIGNMENT_ERROR:
    case NC_INVALID_ARGUMENT:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void check(nc_status s) {
  if (s != NC_OK) throw Failure{exit_code_for(s), std::string(nc_status_string(s)) + ": " + nc_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{kExitUsage, msg}; }

// Owning wrappers for library handles and strings.
struct ModelDeleter {
  void operator()(nc_model* m) const { nc_model_free(m); }
};
struct FramesDeleter {
  void operator()(nc_frames* f) const { nc_frames_free(f); }
};
struct DatasetDeleter {
  void operator()(nc_dataset* d) const { nc_dataset_free(d); }
};
using ModelPtr = std::unique_ptr<nc_model, ModelDeleter>;
using FramesPtr = std::unique_ptr<nc_frames, FramesDeleter>;
using DatasetPtr = std::unique_ptr<nc_dataset, DatasetDeleter>;

class OwnedString {
 public:
  ~OwnedString() { nc_free_string(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }
  json parse() const { return json::parse(str()); }

 private:
  char* p_ = nullptr;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{kExitRuntime, "cannot write " + path.string()};
}

std::size_t frame_count(const nc_frames* f) {
  std::size_t n = 0;
  check(nc_frames_count(f, &n));
  return n;
}

std::pair<int, int> parse_size(const std::string& text, const char* flag) {
  int h = 0, w = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> h >> x >> w) || (x != 'x' && x != 'X') || !in.eof())
    usage_error(std::string(flag) + " expects HxW, got '" + text + "'");
  return {h, w};
}

std::string fmt_num(double v, int prec = 4) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// Shared state of one invocation.
struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out = "nuclass-out";
  std::string log_level = "info";
  int jobs = 1;
  json file;  // parsed --config contents
};

json section(const Globals& g, const char* name) {
  if (g.file.contains(name)) {
    if (!g.file[name].is_object()) usage_error(std::string("config section '") + name + "' must be an object");
    return g.file[name];
  }
  return json::object();
}

// Sets key only when the flag was given, so flags override the config file.
template <class T>
void overlay(json& j, const char* key, const CLI::Option* opt, const T& value) {
  if (opt->count() > 0) j[key] = value;
}

fs::path prepare_out(const Globals& g) {
  fs::path out(g.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Failure{kExitRuntime, "cannot create output directory " + out.string() + ": " + ec.message()};
  return out;
}

void snapshot(const Globals& g, const fs::path& out, const std::string& command, json resolved) {
  resolved["command"] = command;
  resolved["nuclass_version"] = nc_version();
  resolved["global"] = {{"seed", g.seed ? json(*g.seed) : json(nullptr)},
                        {"config", g.config_path},
                        {"out", g.out},
                        {"log_level", g.log_level},
                        {"jobs", g.jobs}};
  write_text(out / "resolved_config.json", resolved.dump(2) + "\n");
}

fs::path manifest_path(const std::string& arg) {
  fs::path p(arg);
  if (fs::is_directory(p)) p /= "manifest.json";
  return p;
}

ModelPtr load_model(const std::string& path) {
  nc_model* m = nullptr;
  check(nc_model_load(path.c_str(), &m, nullptr));
  return ModelPtr(m);
}

ModelPtr create_model(const json& cfg) {
  nc_model* m = nullptr;
  check(nc_model_create(cfg.dump().c_str(), &m));
  return ModelPtr(m);
}

FramesPtr read_frames(const std::string& dir) {
  nc_frames* f = nullptr;
  check(nc_frames_read_dir(dir.c_str(), &f));
  return FramesPtr(f);
}

std::pair<FramesPtr, FramesPtr> load_split(const std::string& manifest, const std::string& split, int jobs) {
  nc_dataset* d = nullptr;
  check(nc_dataset_open(manifest_path(manifest).string().c_str(), &d));
  DatasetPtr ds(d);
  nc_frames *c = nullptr, *r = nullptr;
  check(nc_dataset_load(ds.get(), split.c_str(), jobs, &c, &r));
  return {FramesPtr(c), FramesPtr(r)};
}

FramesPtr run_enhance(const std::string& variant, const std::vector<ModelPtr>& models, const nc_frames* input,
                      const std::vector<unsigned char>& resets, int jobs) {
  std::vector<const nc_model*> raw;
  for (const auto& m : models) raw.push_back(m.get());
  nc_frames* out = nullptr;
  check(nc_enhance(variant.c_str(), raw.data(), raw.size(), input, resets.empty() ? nullptr : resets.data(), jobs,
                   &out));
  return FramesPtr(out);
}

// ---- dataset ----

struct DatasetArgs {
  std::string source, frame_size, codec, preset, ffmpeg, cache;
  int crf_raw = 13, crf_compressed = 40, reference_crf = 18;
  double fps = 6, test_split = 0.111, duration = 0;
  CLI::Option *o_source, *o_crf_raw, *o_crf_comp, *o_fps, *o_size, *o_split, *o_dur, *o_codec, *o_preset, *o_ref,
      *o_ffmpeg, *o_cache;
};

void add_dataset(CLI::App& app, DatasetArgs& a) {
  a.o_source = app.add_option("--source", a.source, "Source video");
  a.o_crf_raw = app.add_option("--crf-raw", a.crf_raw, "CRF of the high-quality encode")->capture_default_str();
  a.o_crf_comp = app.add_option("--crf-compressed", a.crf_compressed, "CRF of the low-bitrate encode")
                     ->capture_default_str();
  a.o_fps = app.add_option("--fps", a.fps, "Sampled frames per second")->capture_default_str();
  a.o_size = app.add_option("--frame-size", a.frame_size, "Frame size HxW (default 240x320; 0x0 keeps source)");
  a.o_split = app.add_option("--test-split", a.test_split, "Tail fraction reserved for testing")
                  ->capture_default_str();
  a.o_dur = app.add_option("--duration", a.duration, "Seconds of source to use (0 = all)");
  a.o_codec = app.add_option("--codec", a.codec, "Encoder (default libx264)");
  a.o_preset = app.add_option("--preset", a.preset, "Encoder preset (default medium)");
  a.o_ref = app.add_option("--reference-crf", a.reference_crf, "Also encode a typical-quality reference at this CRF");
  a.o_ffmpeg = app.add_option("--ffmpeg", a.ffmpeg, "Encoder program (default $NUCLASS_FFMPEG or ffmpeg)");
  a.o_cache = app.add_option("--cache", a.cache, "Encode cache directory (default $NUCLASS_CACHE)");
}

int cmd_dataset(const Globals& g, const DatasetArgs& a) {
  json cfg = section(g, "dataset");
  overlay(cfg, "source", a.o_source, a.source);
  overlay(cfg, "crf_raw", a.o_crf_raw, a.crf_raw);
  overlay(cfg, "crf_compressed", a.o_crf_comp, a.crf_compressed);
  overlay(cfg, "sample_fps", a.o_fps, a.fps);
  if (a.o_size->count()) {
    const auto [h, w] = parse_size(a.frame_size, "--frame-size");
    cfg["frame_height"] = h;
    cfg["frame_width"] = w;
  }
  overlay(cfg, "test_split", a.o_split, a.test_split);
  overlay(cfg, "duration_limit", a.o_dur, a.duration);
  overlay(cfg, "codec", a.o_codec, a.codec);
  overlay(cfg, "preset", a.o_preset, a.preset);
  overlay(cfg, "reference_crf", a.o_ref, a.reference_crf);
  overlay(cfg, "ffmpeg", a.o_ffmpeg, a.ffmpeg);
  overlay(cfg, "cache_dir", a.o_cache, a.cache);
  if (!cfg.contains("source")) usage_error("dataset needs --source");
  const fs::path out = prepare_out(g);
  cfg["out_dir"] = out.string();
  cfg["jobs"] = g.jobs;
  snapshot(g, out, "dataset", {{"dataset", cfg}});

  nc_dataset* d = nullptr;
  check(nc_dataset_build(cfg.dump().c_str(), &d));
  DatasetPtr ds(d);
  OwnedString manifest, bitrates, table;
  check(nc_dataset_manifest(ds.get(), manifest.out()));
  check(nc_dataset_bitrates(ds.get(), bitrates.out(), table.out()));
  write_text(out / "bitrates.json", bitrates.parse().dump(2) + "\n");
  const json m = manifest.parse();
  std::cout << "manifest: " << (out / "manifest.json").string() << "\n"
            << "pairs: " << m["samples"].size() << " (" << m["train_count"] << " train, " << m["test_count"]
            << " test)\n"
            << "checksum: " << m["checksum"].get<std::string>() << "\n\n"
            << table.str();
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string manifest, variant = "base", crop;
  int epochs = 200, batch_size = 4, clip_length = 8, patience = 10, early_stop = 0, checkpoint_every = 1;
  double max_grad_norm = 0;
  int base_channels = 48, kernel = 7;
  double lr = 2e-4, lambda = 1.0, factor = 0.5, min_lr = 1e-6;
  bool no_feedback = false, keep_last = false;
  CLI::Option *o_variant, *o_epochs, *o_batch, *o_lr, *o_lambda, *o_crop, *o_clip, *o_nofb, *o_patience, *o_factor,
      *o_minlr, *o_early, *o_gclip, *o_ckpt, *o_keep, *o_base, *o_kernel;
};

void add_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--manifest", a.manifest, "Dataset manifest (or its directory)")->required();
  a.o_variant = app.add_option("--variant", a.variant, "base, sequential or diffusion")
                    ->check(CLI::IsMember({"base", "sequential", "diffusion"}))
                    ->capture_default_str();
  a.o_epochs = app.add_option("--epochs", a.epochs, "Training epochs")->capture_default_str();
  a.o_batch = app.add_option("--batch-size", a.batch_size, "Samples per optimizer step")->capture_default_str();
  a.o_lr = app.add_option("--lr", a.lr, "Initial learning rate")->capture_default_str();
  a.o_lambda = app.add_option("--lambda", a.lambda, "Pixel loss weight")->capture_default_str();
  a.o_crop = app.add_option("--crop", a.crop, "Random training crop HxW");
  a.o_clip = app.add_option("--clip-length", a.clip_length, "Sequential: frames per clip")->capture_default_str();
  a.o_nofb = app.add_flag("--no-feedback", a.no_feedback, "Sequential: reset the feedback on every frame");
  a.o_patience = app.add_option("--patience", a.patience, "Plateau patience in epochs")->capture_default_str();
  a.o_factor = app.add_option("--factor", a.factor, "Plateau reduction factor")->capture_default_str();
  a.o_minlr = app.add_option("--min-lr", a.min_lr, "Learning-rate floor")->capture_default_str();
  a.o_early = app.add_option("--early-stop", a.early_stop, "Stop after this many epochs without improvement");
  a.o_gclip = app.add_option("--max-grad-norm", a.max_grad_norm, "Clip the global gradient norm per step (0 = off)");
  a.o_ckpt = app.add_option("--checkpoint-every", a.checkpoint_every, "Epoch checkpoint cadence (0 = best only)");
  a.o_keep = app.add_flag("--keep-last", a.keep_last, "Keep the final parameters instead of the best ones");
  a.o_base = app.add_option("--base-channels", a.base_channels, "Model width")->capture_default_str();
  a.o_kernel = app.add_option("--kernel", a.kernel, "Convolution kernel size")->capture_default_str();
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  json tcfg = section(g, "train");
  overlay(tcfg, "variant", a.o_variant, a.variant);
  overlay(tcfg, "epochs", a.o_epochs, a.epochs);
  overlay(tcfg, "batch_size", a.o_batch, a.batch_size);
  overlay(tcfg, "learning_rate", a.o_lr, a.lr);
  overlay(tcfg, "lambda", a.o_lambda, a.lambda);
  if (a.o_crop->count()) {
    const auto [h, w] = parse_size(a.crop, "--crop");
    tcfg["crop_height"] = h;
    tcfg["crop_width"] = w;
  }
  overlay(tcfg, "clip_length", a.o_clip, a.clip_length);
  if (a.o_nofb->count()) tcfg["feedback"] = false;
  json plateau = tcfg.value("plateau", json::object());
  overlay(plateau, "patience", a.o_patience, a.patience);
  overlay(plateau, "factor", a.o_factor, a.factor);
  overlay(plateau, "min_lr", a.o_minlr, a.min_lr);
  if (!plateau.empty()) tcfg["plateau"] = plateau;
  overlay(tcfg, "early_stop_patience", a.o_early, a.early_stop);
  overlay(tcfg, "max_grad_norm", a.o_gclip, a.max_grad_norm);
  overlay(tcfg, "checkpoint_every", a.o_ckpt, a.checkpoint_every);
  if (a.o_keep->count()) tcfg["restore_best"] = false;
  if (g.seed) tcfg["seed"] = *g.seed;
  tcfg["jobs"] = g.jobs;
  const fs::path out = prepare_out(g);
  tcfg["out_dir"] = out.string();
  const std::string variant = tcfg.value("variant", std::string("base"));

  json mcfg = section(g, "model");
  overlay(mcfg, "base_channels", a.o_base, a.base_channels);
  overlay(mcfg, "kernel", a.o_kernel, a.kernel);
  if (g.seed) mcfg["seed"] = *g.seed;
  // Diffusion takes three stage configs, or derives them from the model config.
  std::vector<json> stage_cfgs;
  if (variant == "diffusion") {
    if (g.file.contains("stages")) {
      if (!g.file["stages"].is_array() || g.file["stages"].size() != 3)
        usage_error("config 'stages' must list exactly 3 model configs");
      for (const auto& s : g.file["stages"]) {
        json merged = mcfg;
        merged.update(s);
        stage_cfgs.push_back(merged);
      }
    } else {
      for (int k = 0; k < 3; ++k) {
        json s = mcfg;
        s["seed"] = mcfg.value("seed", std::uint64_t{0}) + static_cast<std::uint64_t>(k);
        stage_cfgs.push_back(s);
      }
    }
  } else {
    stage_cfgs.push_back(mcfg);
  }
  snapshot(g, out, "train",
           {{"manifest", manifest_path(a.manifest).string()}, {"train", tcfg}, {"models", stage_cfgs}});

  std::vector<ModelPtr> models;
  for (const auto& c : stage_cfgs) models.push_back(create_model(c));
  nc_dataset* d = nullptr;
  check(nc_dataset_open(manifest_path(a.manifest).string().c_str(), &d));
  DatasetPtr ds(d);
  std::vector<nc_model*> raw;
  for (auto& m : models) raw.push_back(m.get());
  OwnedString report, curve;
  check(nc_train(raw.data(), raw.size(), ds.get(), tcfg.dump().c_str(), report.out(), curve.out()));
  std::vector<std::string> saved;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const fs::path p = out / (models.size() == 1 ? std::string("model.ckpt") : "stage-" + std::to_string(k + 1) + ".ckpt");
    check(nc_model_save(models[k].get(), p.string().c_str()));
    saved.push_back(p.string());
  }
  const json r = report.parse();
  std::cout << "variant: " << variant << "\n"
            << "initial val loss: " << fmt_num(r["initial_val_loss"].get<double>(), 6) << "\n"
            << "best val loss: " << fmt_num(r["best_val_loss"].get<double>(), 6) << " at epoch " << r["best_epoch"]
            << "\n"
            << "epochs run: " << r["epochs"].size() << (r["early_stopped"].get<bool>() ? " (early stop)" : "") << "\n";
  if (r.contains("stage_train_mae")) std::cout << "stage train MAE: " << r["stage_train_mae"].dump() << "\n";
  for (const auto& s : saved) std::cout << "saved: " << s << "\n";
  return 0;
}

// ---- enhance ----

struct EnhanceArgs {
  std::vector<std::string> checkpoints;
  std::string variant = "base", input, manifest, split = "test";
  std::vector<std::size_t> resets;
  int reset_every = 0;
};

void add_enhance(CLI::App& app, EnhanceArgs& a) {
  app.add_option("--checkpoint", a.checkpoints, "Model checkpoint(s); three for diffusion")->required();
  app.add_option("--variant", a.variant, "base, sequential or diffusion")
      ->check(CLI::IsMember({"base", "sequential", "diffusion"}))
      ->capture_default_str();
  auto* in = app.add_option("--input", a.input, "Directory of compressed PNG frames");
  auto* man = app.add_option("--manifest", a.manifest, "Take the compressed frames of a dataset split");
  in->excludes(man);
  app.add_option("--split", a.split, "Dataset split with --manifest")->check(CLI::IsMember({"train", "test"}));
  app.add_option("--reset", a.resets, "Frame indices where sequential feedback restarts");
  app.add_option("--reset-every", a.reset_every, "Restart sequential feedback every N frames");
}

FramesPtr enhance_input(const Globals& g, const std::string& input, const std::string& manifest,
                        const std::string& split, FramesPtr* raw) {
  if (!input.empty()) return read_frames(input);
  if (manifest.empty()) usage_error("give --input or --manifest");
  auto [c, r] = load_split(manifest, split, g.jobs);
  if (raw) *raw = std::move(r);
  return std::move(c);
}

std::vector<unsigned char> reset_flags(std::size_t n, const std::vector<std::size_t>& at, int every) {
  if (at.empty() && every <= 0) return {};
  std::vector<unsigned char> flags(n, 0);
  for (std::size_t i : at) {
    if (i >= n) usage_error("--reset index " + std::to_string(i) + " is past the last frame");
    flags[i] = 1;
  }
  if (every > 0)
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(every)) flags[i] = 1;
  return flags;
}

int cmd_enhance(const Globals& g, const EnhanceArgs& a) {
  const fs::path out = prepare_out(g);
  snapshot(g, out, "enhance",
           {{"enhance",
             {{"checkpoints", a.checkpoints},
              {"variant", a.variant},
              {"input", a.input},
              {"manifest", a.manifest},
              {"split", a.split},
              {"reset", a.resets},
              {"reset_every", a.reset_every}}}});
  std::vector<ModelPtr> models;
  for (const auto& c : a.checkpoints) models.push_back(load_model(c));
  FramesPtr input = enhance_input(g, a.input, a.manifest, a.split, nullptr);
  const auto flags = reset_flags(frame_count(input.get()), a.resets, a.reset_every);
  FramesPtr enhanced = run_enhance(a.variant, models, input.get(), flags, g.jobs);
  const fs::path dir = out / "frames";
  check(nc_frames_write_dir(enhanced.get(), dir.string().c_str()));
  std::cout << "enhanced " << frame_count(enhanced.get()) << " frames -> " << dir.string() << "\n";
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string compressed, enhanced, raw, manifest, split = "test", variant = "base";
  std::vector<std::string> checkpoints;
  bool save_enhanced = false;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--compressed", a.compressed, "Directory of compressed frames");
  app.add_option("--enhanced", a.enhanced, "Directory of enhanced frames");
  app.add_option("--raw", a.raw, "Directory of reference frames");
  app.add_option("--manifest", a.manifest, "Evaluate a dataset split instead of directories");
  app.add_option("--split", a.split, "Dataset split with --manifest")->check(CLI::IsMember({"train", "test"}));
  app.add_option("--checkpoint", a.checkpoints, "Enhance with these checkpoint(s) before evaluating");
  app.add_option("--variant", a.variant, "Variant used with --checkpoint")
      ->check(CLI::IsMember({"base", "sequential", "diffusion"}));
  app.add_flag("--save-enhanced", a.save_enhanced, "Also write the enhanced frames");
}

void print_row(const char* name, const json& r) {
  const json& mean = r["mean"];
  const double psnr = mean["psnr_db"].is_null() ? INFINITY : mean["psnr_db"].get<double>();
  std::printf("%-18s %10s %10s %8s   %-9s %-9s\n", name, fmt_num(mean["mae"].get<double>(), 5).c_str(),
              fmt_num(psnr, 3).c_str(), fmt_num(mean["ssim"].get<double>(), 4).c_str(),
              r["quality_gate"]["psnr_ok"].get<bool>() ? "yes" : "no",
              r["quality_gate"]["ssim_ok"].get<bool>() ? "yes" : "no");
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const fs::path out = prepare_out(g);
  snapshot(g, out, "eval",
           {{"eval",
             {{"compressed", a.compressed},
              {"enhanced", a.enhanced},
              {"raw", a.raw},
              {"manifest", a.manifest},
              {"split", a.split},
              {"checkpoints", a.checkpoints},
              {"variant", a.variant}}}});
  FramesPtr compressed, enhanced, raw;
  if (!a.manifest.empty()) {
    if (!a.compressed.empty() || !a.raw.empty()) usage_error("--manifest excludes --compressed/--raw");
    auto [c, r] = load_split(a.manifest, a.split, g.jobs);
    compressed = std::move(c);
    raw = std::move(r);
  } else {
    if (a.compressed.empty() || a.raw.empty()) usage_error("eval needs --compressed and --raw, or --manifest");
    compressed = read_frames(a.compressed);
    raw = read_frames(a.raw);
  }
  if (!a.checkpoints.empty()) {
    if (!a.enhanced.empty()) usage_error("--checkpoint excludes --enhanced");
    std::vector<ModelPtr> models;
    for (const auto& c : a.checkpoints) models.push_back(load_model(c));
    enhanced = run_enhance(a.variant, models, compressed.get(), {}, g.jobs);
    if (a.save_enhanced) check(nc_frames_write_dir(enhanced.get(), (out / "enhanced").string().c_str()));
  } else if (!a.enhanced.empty()) {
    enhanced = read_frames(a.enhanced);
  } else {
    usage_error("eval needs --enhanced or --checkpoint");
  }
  OwnedString js, csv;
  check(nc_compare(compressed.get(), enhanced.get(), raw.get(), g.jobs, js.out(), csv.out()));
  const json r = js.parse();
  write_text(out / "eval.json", r.dump(2) + "\n");
  write_text(out / "eval.csv", csv.str());
  std::printf("%-18s %10s %10s %8s   %-9s %-9s\n", "pair", "MAE", "PSNR dB", "SSIM", "PSNR>30", "SSIM>0.9");
  print_row("compressed vs raw", r["compressed_vs_raw"]);
  print_row("enhanced vs raw", r["enhanced_vs_raw"]);
  if (r.contains("mae_ratio"))
    std::printf("MAE reduction: %.2f%%\n", 100.0 * (1.0 - r["mae_ratio"].get<double>()));
  std::printf("reports: %s, %s\n", (out / "eval.json").string().c_str(), (out / "eval.csv").string().c_str());
  return 0;
}

// ---- quantize ----

struct QuantizeArgs {
  std::string checkpoint, manifest, split = "test", probe, raw, sweep;
  int bits = 16, frac_bits = -1;
  double gate = 0.01;
  CLI::Option *o_bits, *o_frac, *o_gate, *o_sweep;
};

void add_quantize(CLI::App& app, QuantizeArgs& a) {
  app.add_option("--checkpoint", a.checkpoint, "Float model checkpoint")->required();
  a.o_bits = app.add_option("--bits", a.bits, "Total bits per parameter")->capture_default_str();
  a.o_frac = app.add_option("--frac-bits", a.frac_bits, "Fractional bits (default: largest that fits)");
  a.o_sweep = app.add_option("--sweep", a.sweep, "Bit-width sweep A..B[:step], step defaults to 2");
  app.add_option("--manifest", a.manifest, "Probe with a dataset split");
  app.add_option("--split", a.split, "Dataset split with --manifest")->check(CLI::IsMember({"train", "test"}));
  app.add_option("--probe", a.probe, "Directory of probe frames");
  app.add_option("--raw", a.raw, "Reference frames for the probe directory");
  a.o_gate = app.add_option("--gate", a.gate, "Allowed relative deviation")->capture_default_str();
}

std::vector<int> parse_sweep(const std::string& s) {
  int lo = 0, hi = 0, step = 2;
  char d1 = 0, d2 = 0, colon = 0;
  std::istringstream in(s);
  if (!(in >> lo >> d1 >> d2 >> hi) || d1 != '.' || d2 != '.') usage_error("--sweep expects A..B[:step]");
  if (in >> colon) {
    if (colon != ':' || !(in >> step)) usage_error("--sweep expects A..B[:step]");
  }
  if (lo < 2 || hi < lo || step < 1) usage_error("--sweep range must satisfy 2 <= A <= B and step >= 1");
  std::vector<int> out;
  for (int b = lo; b <= hi; b += step) out.push_back(b);
  return out;
}

int cmd_quantize(const Globals& g, QuantizeArgs a) {
  const fs::path out = prepare_out(g);
  const json qcfg = section(g, "quantize");
  for (const auto& [key, v] : qcfg.items()) {
    if (key == "bits") {
      if (!a.o_bits->count()) a.bits = v.get<int>();
    } else if (key == "frac_bits") {
      if (!a.o_frac->count()) a.frac_bits = v.get<int>();
    } else if (key == "gate") {
      if (!a.o_gate->count()) a.gate = v.get<double>();
    } else if (key == "sweep") {
      if (!a.o_sweep->count()) a.sweep = v.get<std::string>();
    } else {
      usage_error("unknown quantize config field '" + key + "'");
    }
  }
  snapshot(g, out, "quantize",
           {{"quantize",
             {{"checkpoint", a.checkpoint},
              {"bits", a.bits},
              {"frac_bits", a.frac_bits},
              {"sweep", a.sweep},
              {"manifest", a.manifest},
              {"split", a.split},
              {"probe", a.probe},
              {"raw", a.raw},
              {"gate", a.gate}}}});
  const auto bits_list = a.sweep.empty() ? std::vector<int>{a.bits} : parse_sweep(a.sweep);
  ModelPtr model = load_model(a.checkpoint);
  FramesPtr probe, raw;
  if (!a.manifest.empty()) {
    auto [c, r] = load_split(a.manifest, a.split, g.jobs);
    probe = std::move(c);
    raw = std::move(r);
  } else if (!a.probe.empty()) {
    probe = read_frames(a.probe);
    if (!a.raw.empty()) raw = read_frames(a.raw);
  }

  json rows = json::array();
  std::string csv = "total_bits,frac_bits,payload_bytes,payload_ratio,output_rel_l1_mean,mae_rel_mean,within_gate\n";
  for (int bits : bits_list) {
    nc_model* q = nullptr;
    OwnedString report;
    check(nc_quantize(model.get(), bits, a.sweep.empty() ? a.frac_bits : -1, &q, report.out()));
    ModelPtr qm(q);
    json row = report.parse();
    if (probe) {
      OwnedString dev;
      check(nc_quantization_deviation(model.get(), qm.get(), probe.get(), raw.get(), a.gate, g.jobs, dev.out()));
      row["deviation"] = dev.parse();
    }
    const fs::path ckpt = out / ("model-q" + std::to_string(bits) + ".ckpt");
    check(nc_model_save(qm.get(), ckpt.string().c_str()));
    row["checkpoint"] = ckpt.string();
    const json& dv = row.contains("deviation") ? row["deviation"] : json::object();
    auto num = [](const json& v) { return v.is_null() ? std::string("") : fmt_num(v.get<double>(), 6); };
    csv += std::to_string(bits) + "," + std::to_string(row["spec"]["frac_bits"].get<int>()) + "," +
           std::to_string(row["size"]["payload_bytes"].get<std::uint64_t>()) + "," +
           fmt_num(row["size"]["payload_ratio"].get<double>(), 4) + "," +
           (dv.empty() ? "" : num(dv["output_relative_l1"]["mean"])) + "," +
           (dv.empty() ? "" : num(dv["mae_vs_raw_relative"]["mean"])) + "," +
           (dv.empty() ? "" : (dv["within_gate"].get<bool>() ? "yes" : "no")) + "\n";
    rows.push_back(row);
  }
  write_text(out / "quantize.json", json{{"gate", a.gate}, {"rows", rows}}.dump(2) + "\n");
  write_text(out / "quantize.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nuclass: residual enhancement of low-bitrate video frames"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed for initialization and shuffling");
  app.add_option("--config", g.config_path, "JSON config file (flags override it)")->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", g.out, "Output directory")->capture_default_str();
  auto* log_opt = app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
                      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
                      ->capture_default_str();
  auto* jobs_opt = app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  DatasetArgs dataset_args;
  TrainArgs train_args;
  EnhanceArgs enhance_args;
  EvalArgs eval_args;
  QuantizeArgs quantize_args;
  auto* dataset = app.add_subcommand("dataset", "Build paired frames from a source video");
  add_dataset(*dataset, dataset_args);
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  add_train(*train, train_args);
  auto* enhance = app.add_subcommand("enhance", "Enhance a frame sequence");
  add_enhance(*enhance, enhance_args);
  auto* eval = app.add_subcommand("eval", "Compare compressed and enhanced frames against raw ones");
  add_eval(*eval, eval_args);
  auto* quantize = app.add_subcommand("quantize", "Fixed-point quantization with deviation and size reports");
  add_quantize(*quantize, quantize_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (!g.config_path.empty()) {
      std::ifstream in(g.config_path);
      try {
        g.file = json::parse(in);
      } catch (const json::exception& e) {
        usage_error("cannot parse " + g.config_path + ": " + e.what());
      }
      if (!g.file.is_object()) usage_error(g.config_path + " must hold a JSON object");
      // Global settings from the file, unless given as flags.
      if (g.file.contains("seed") && !seed_opt->count()) seed = g.file["seed"].get<std::uint64_t>(), g.seed = seed;
      if (g.file.contains("out") && !out_opt->count()) g.out = g.file["out"].get<std::string>();
      if (g.file.contains("log_level") && !log_opt->count()) g.log_level = g.file["log_level"].get<std::string>();
      if (g.file.contains("jobs") && !jobs_opt->count()) g.jobs = g.file["jobs"].get<int>();
    }
    if (seed_opt->count()) g.seed = seed;
    check(nc_set_log_level(g.log_level.c_str()));
    if (dataset->parsed()) return cmd_dataset(g, dataset_args);
    if (train->parsed()) return cmd_train(g, train_args);
    if (enhance->parsed()) return cmd_enhance(g, enhance_args);
    if (eval->parsed()) return cmd_eval(g, eval_args);
    if (quantize->parsed()) return cmd_quantize(g, quantize_args);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const json::exception& e) {
    std::cerr << "error: bad configuration value: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
