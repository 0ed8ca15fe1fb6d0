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

#include "train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "checkpoint.hpp"
#include "error.hpp"
#include "losses.hpp"

namespace nuclass {

namespace fs = std::filesystem;

void validate(const TrainConfig& c) {
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(c.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(c.lambda > 0)) throw ConfigError("lambda must be positive");
  if (!(c.plateau.factor > 0 && c.plateau.factor < 1)) throw ConfigError("plateau factor must be in (0,1)");
  if (c.plateau.patience < 0) throw ConfigError("plateau patience must be >= 0");
  if (c.crop_height < 0 || c.crop_width < 0) throw ConfigError("crop sizes must be >= 0");
  if ((c.crop_height == 0) != (c.crop_width == 0)) throw ConfigError("set both crop sizes or neither");
  if (c.clip_length < 1) throw ConfigError("clip_length must be >= 1");
  if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (c.early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(c.max_grad_norm >= 0)) throw ConfigError("max_grad_norm must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Portable Fisher-Yates (std::shuffle is implementation-defined).
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

void require_split(const PairedFrames& s, const char* name) {
  if (s.compressed.empty()) throw PreconditionError(fmt::format("{} split is empty", name));
  if (s.compressed.size() != s.raw.size())
    throw AlignmentError(fmt::format("{} split has {} compressed but {} raw frames", name, s.compressed.size(),
                                     s.raw.size()));
  for (std::size_t i = 0; i < s.size(); ++i)
    require_same_shape(s.compressed[i].shape(), s.raw[i].shape(), name);
}

struct Window {
  int y = 0, x = 0, h = 0, w = 0;
};

class Trainer {
 public:
  Trainer(Model& model, const TrainData& data, const TrainConfig& cfg)
      : model_(model),
        data_(data),
        cfg_(cfg),
        rng_(cfg.seed),
        adam_(sizes(model), cfg.adam),
        sched_(cfg.learning_rate, cfg.plateau),
        grads_(model.make_gradients()) {
    validate(cfg);
    require_split(data.train, "train");
    require_split(data.test, "test");
    const Shape s = data.train.compressed.front().shape();
    model.check_input(s);
    if (cfg.crop_height) {
      const int d = model.config().size_divisor();
      if (cfg.crop_height % d || cfg.crop_width % d)
        throw ConfigError(fmt::format("crop {}x{} must be divisible by {}", cfg.crop_height, cfg.crop_width, d));
    }
    for (const auto& f : data.train.compressed)
      if (cfg.crop_height && (f.height() < cfg.crop_height || f.width() < cfg.crop_width))
        throw ConfigError(fmt::format("crop {}x{} exceeds frame {}", cfg.crop_height, cfg.crop_width, f.shape().str()));
    scratch_.assign(std::max(1, cfg.jobs), model.make_gradients());
    caches_.resize(scratch_.size());
  }

  Window draw_window(const FrameTensor& f) {
    if (!cfg_.crop_height) return {0, 0, f.height(), f.width()};
    const auto y = static_cast<int>(rng_() % static_cast<std::uint64_t>(f.height() - cfg_.crop_height + 1));
    const auto x = static_cast<int>(rng_() % static_cast<std::uint64_t>(f.width() - cfg_.crop_width + 1));
    return {y, x, cfg_.crop_height, cfg_.crop_width};
  }

  static FrameTensor cut(const FrameTensor& f, const Window& w) {
    if (w.y == 0 && w.x == 0 && w.h == f.height() && w.w == f.width()) return f;
    return crop(f, w.y, w.x, w.h, w.w);
  }

  struct Item {
    FrameTensor input;
    ResidualTensor target;
  };

  // One optimizer step over the items; returns the mean loss and stores each
  // item's prediction in `preds`.
  double step(const std::vector<Item>& items, std::vector<ResidualTensor>* preds, int epoch, std::size_t batch) {
    for (auto& g : grads_) g.zero();
    const double scale = 1.0 / static_cast<double>(items.size());
    std::vector<double> losses(items.size());
    if (preds) preds->assign(items.size(), {});
    const std::size_t lanes = scratch_.size();
    for (std::size_t base = 0; base < items.size(); base += lanes) {
      const std::size_t n = std::min(lanes, items.size() - base);
      parallel_for(n, cfg_.jobs, [&](std::size_t k) {
        const Item& it = items[base + k];
        auto& buf = scratch_[k];
        for (auto& g : buf) g.zero();
        ResidualTensor pred = model_.forward(it.input, caches_[k]);
        losses[base + k] = pixel_loss(pred, it.target, cfg_.lambda);
        model_.backward(caches_[k], pixel_loss_grad(pred, it.target, cfg_.lambda * scale), buf);
        if (preds) (*preds)[base + k] = std::move(pred);
      });
      for (std::size_t k = 0; k < n; ++k) {
        if (all_finite(scratch_[k])) {
          accumulate(scratch_[k]);
        } else {
          // Near-constant crops drive every normalization to its eps floor and
          // the backward pass overflows; such a sample contributes nothing.
          ++report_.skipped_samples;
          spdlog::warn("epoch {} batch {}: dropped a sample with non-finite gradient", epoch, batch);
        }
      }
    }
    double loss = 0;
    for (double l : losses) loss += l * scale;
    if (!std::isfinite(loss))
      throw NumericError(fmt::format("non-finite training loss at epoch {} batch {}", epoch, batch));
    auto params = model_.parameters();
    std::vector<std::span<float>> pviews;
    pviews.reserve(params.size());
    for (auto& p : params) pviews.push_back(p.values);
    const auto gviews = buffers(grads_);
    if (cfg_.max_grad_norm > 0) clip_norm(gviews, cfg_.max_grad_norm);
    adam_.step(pviews, gviews, sched_.lr());
    report_.step_losses.push_back(loss);
    return loss;
  }

  // Runs the epoch loop around `run_epoch` (returns the epoch's train loss)
  // and `val` (returns the validation loss).
  template <class EpochFn, class ValFn>
  TrainReport run(EpochFn&& run_epoch, ValFn&& val) {
    const auto t0 = Clock::now();
    report_.variant = cfg_.variant;
    if (!cfg_.out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(cfg_.out_dir, ec);
      if (ec) throw IoError(fmt::format("cannot create '{}': {}", cfg_.out_dir.string(), ec.message()));
    }
    report_.initial_val_loss = val();
    report_.best_val_loss = report_.initial_val_loss;
    Model best = model_;
    save_best();
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      const auto te = Clock::now();
      const double lr = sched_.lr();
      const double train_loss = run_epoch(epoch);
      const double val_loss = val();
      if (!std::isfinite(val_loss)) throw NumericError(fmt::format("non-finite validation loss at epoch {}", epoch));
      report_.epochs.push_back({epoch, train_loss, val_loss, lr, seconds_since(te)});
      if (val_loss < report_.best_val_loss) {
        report_.best_val_loss = val_loss;
        report_.best_epoch = epoch;
        best = model_;
        since_best = 0;
        save_best();
      } else {
        ++since_best;
      }
      if (!cfg_.out_dir.empty() && cfg_.checkpoint_every > 0 && epoch % cfg_.checkpoint_every == 0) {
        const auto path = cfg_.out_dir / fmt::format("epoch-{}.ckpt", epoch);
        save_checkpoint(model_, path);
        report_.checkpoints.push_back(path.string());
      }
      spdlog::info("{} epoch {}/{}: train {:.6f} val {:.6f} lr {:.3g} ({:.1f}s)", to_string(cfg_.variant), epoch,
                   cfg_.epochs, train_loss, val_loss, lr, report_.epochs.back().seconds);
      sched_.observe(val_loss);
      if (cfg_.early_stop_patience > 0 && since_best >= cfg_.early_stop_patience) {
        report_.early_stopped = true;
        break;
      }
    }
    report_.epochs_to_best = report_.best_epoch;
    if (cfg_.restore_best) model_ = std::move(best);
    report_.wall_seconds = seconds_since(t0);
    write_outputs();
    return std::move(report_);
  }

  Model& model() { return model_; }
  const TrainConfig& cfg() const { return cfg_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  static std::vector<std::size_t> sizes(Model& m) {
    std::vector<std::size_t> out;
    for (const auto& p : m.parameters()) out.push_back(p.values.size());
    return out;
  }

  static bool all_finite(Gradients<float>& g) {
    for (auto b : buffers(g))
      for (float v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }

  static void clip_norm(const std::vector<std::span<float>>& g, double limit) {
    double sq = 0;
    for (auto b : g)
      for (float v : b) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (norm <= limit) return;
    const auto f = static_cast<float>(limit / norm);
    for (auto b : g)
      for (float& v : b) v *= f;
  }

  void accumulate(Gradients<float>& g) {
    auto dst = buffers(grads_);
    auto src = buffers(g);
    for (std::size_t b = 0; b < dst.size(); ++b)
      for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
  }

  void save_best() {
    if (cfg_.out_dir.empty()) return;
    const auto path = cfg_.out_dir / "best.ckpt";
    save_checkpoint(model_, path);
    if (std::find(report_.checkpoints.begin(), report_.checkpoints.end(), path.string()) == report_.checkpoints.end())
      report_.checkpoints.push_back(path.string());
  }

  void write_outputs() {
    if (cfg_.out_dir.empty()) return;
    std::ofstream(cfg_.out_dir / "train_report.json") << to_json(report_).dump(2) << "\n";
    std::ofstream(cfg_.out_dir / "train_curve.csv") << loss_csv(report_);
  }

  Model& model_;
  const TrainData& data_;
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  Adam adam_;
  PlateauScheduler sched_;
  Gradients<float> grads_;
  std::vector<Gradients<float>> scratch_;
  std::vector<ForwardCache<float>> caches_;
  TrainReport report_;
};

double sequence_validation_loss(const Model& model, const PairedFrames& split, double lambda, bool feedback) {
  double total = 0;
  ResidualTensor prev;
  for (std::size_t t = 0; t < split.size(); ++t) {
    const FrameTensor input =
        (t == 0 || !feedback) ? split.compressed[t] : apply_residual(split.compressed[t], prev);
    ResidualTensor pred = model.forward(input);
    total += pixel_loss(pred, residual_target(split.raw[t], input), lambda);
    prev = std::move(pred);
  }
  return total / static_cast<double>(split.size());
}

}  // namespace

double validation_loss(const Model& model, const PairedFrames& split, double lambda, int jobs) {
  std::vector<double> losses(split.size());
  parallel_for(split.size(), jobs, [&](std::size_t i) {
    losses[i] = pixel_loss(model.forward(split.compressed[i]), residual_target(split.raw[i], split.compressed[i]),
                           lambda);
  });
  double total = 0;
  for (double l : losses) total += l;
  return split.size() ? total / static_cast<double>(split.size()) : 0.0;
}

TrainReport train_base(Model& model, const TrainData& data, const TrainConfig& cfg) {
  Trainer tr(model, data, cfg);
  const std::size_t n = data.train.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto epoch_fn = [&](int epoch) {
    shuffle(order, tr.rng());
    double total = 0;
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t b0 = 0, batch = 1; b0 < n; b0 += bs, ++batch) {
      std::vector<Trainer::Item> items;
      for (std::size_t k = b0; k < std::min(n, b0 + bs); ++k) {
        const auto& c = data.train.compressed[order[k]];
        const Window w = tr.draw_window(c);
        FrameTensor input = Trainer::cut(c, w);
        ResidualTensor target = residual_target(Trainer::cut(data.train.raw[order[k]], w), input);
        items.push_back({std::move(input), std::move(target)});
      }
      total += tr.step(items, nullptr, epoch, batch) * static_cast<double>(items.size());
    }
    return total / static_cast<double>(n);
  };
  auto val_fn = [&] { return validation_loss(tr.model(), data.test, cfg.lambda, cfg.jobs); };
  return tr.run(epoch_fn, val_fn);
}

TrainReport train_sequential(Model& model, const TrainData& data, const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.variant = Variant::Sequential;
  Trainer tr(model, data, c);
  const std::size_t n = data.train.size();
  const std::size_t len = c.feedback ? static_cast<std::size_t>(c.clip_length) : 1;
  std::vector<std::pair<std::size_t, std::size_t>> clips;  // [begin, end)
  for (std::size_t b = 0; b < n; b += len) clips.emplace_back(b, std::min(n, b + len));
  std::vector<std::size_t> order(clips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto epoch_fn = [&](int epoch) {
    shuffle(order, tr.rng());
    double total = 0;
    std::size_t frames = 0, batch = 0;
    const std::size_t bs = static_cast<std::size_t>(c.batch_size);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += bs) {
      std::vector<std::size_t> members(order.begin() + b0, order.begin() + std::min(order.size(), b0 + bs));
      std::vector<Window> windows;
      std::size_t longest = 0;
      for (std::size_t m : members) {
        windows.push_back(tr.draw_window(data.train.compressed[clips[m].first]));
        longest = std::max(longest, clips[m].second - clips[m].first);
      }
      std::vector<ResidualTensor> feedback(members.size());
      for (std::size_t t = 0; t < longest; ++t) {
        std::vector<Trainer::Item> items;
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < members.size(); ++k) {
          const auto [begin, end] = clips[members[k]];
          if (begin + t >= end) continue;
          const FrameTensor comp = Trainer::cut(data.train.compressed[begin + t], windows[k]);
          FrameTensor input = t == 0 ? comp : apply_residual(comp, feedback[k]);
          ResidualTensor target = residual_target(Trainer::cut(data.train.raw[begin + t], windows[k]), input);
          items.push_back({std::move(input), std::move(target)});
          active.push_back(k);
        }
        std::vector<ResidualTensor> preds;
        total += tr.step(items, &preds, epoch, ++batch) * static_cast<double>(items.size());
        frames += items.size();
        // The fed-back residual is data: no gradient flows through it.
        for (std::size_t a = 0; a < active.size(); ++a) feedback[active[a]] = std::move(preds[a]);
      }
    }
    return total / static_cast<double>(frames);
  };
  auto val_fn = [&] {
    return c.feedback ? sequence_validation_loss(tr.model(), data.test, c.lambda, true)
                      : validation_loss(tr.model(), data.test, c.lambda, c.jobs);
  };
  return tr.run(epoch_fn, val_fn);
}

namespace {

PairedFrames pass_through(const Model& stage, const PairedFrames& s, int jobs) {
  PairedFrames out;
  out.raw = s.raw;
  out.compressed.resize(s.size());
  parallel_for(s.size(), jobs, [&](std::size_t i) { out.compressed[i] = enhance_frame(stage, s.compressed[i]); });
  return out;
}

double split_mae(const PairedFrames& s) {
  double total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) total += mae_loss(s.compressed[i], s.raw[i]);
  return total / static_cast<double>(s.size());
}

}  // namespace

TrainReport train_diffusion(std::array<Model*, 3> stages, const TrainData& data, const TrainConfig& cfg) {
  for (const Model* m : stages)
    if (!m) throw ConfigError("diffusion stage model is null");
  for (const Model* m : stages)
    if (m->config().image_channels != stages[0]->config().image_channels ||
        m->config().size_divisor() != stages[0]->config().size_divisor())
      throw ConfigError("diffusion stages must share one input/output shape contract");
  validate(cfg);
  require_split(data.train, "train");
  require_split(data.test, "test");
  const auto t0 = Clock::now();
  TrainReport report;
  report.variant = Variant::Diffusion;
  TrainData current = data;
  report.stage_train_mae.push_back(split_mae(current.train));
  report.stage_val_mae.push_back(split_mae(current.test));
  for (std::size_t k = 0; k < stages.size(); ++k) {
    TrainConfig c = cfg;
    c.variant = Variant::Diffusion;
    c.seed = cfg.seed + k;
    if (!cfg.out_dir.empty()) c.out_dir = cfg.out_dir / fmt::format("stage-{}", k + 1);
    TrainReport r = train_base(*stages[k], current, c);
    r.stage = static_cast<int>(k + 1);
    // Later stages train on the frozen cascade's output.
    current.train = pass_through(*stages[k], current.train, cfg.jobs);
    current.test = pass_through(*stages[k], current.test, cfg.jobs);
    report.stage_train_mae.push_back(split_mae(current.train));
    report.stage_val_mae.push_back(split_mae(current.test));
    for (const auto& p : r.checkpoints) report.checkpoints.push_back(p);
    report.step_losses.insert(report.step_losses.end(), r.step_losses.begin(), r.step_losses.end());
    report.skipped_samples += r.skipped_samples;
    report.stages.push_back(std::move(r));
  }
  const TrainReport& last = report.stages.back();
  report.initial_val_loss = report.stages.front().initial_val_loss;
  report.epochs = last.epochs;
  report.best_epoch = last.best_epoch;
  report.best_val_loss = last.best_val_loss;
  report.epochs_to_best = last.epochs_to_best;
  report.wall_seconds = seconds_since(t0);
  if (!cfg.out_dir.empty()) {
    std::ofstream(cfg.out_dir / "train_report.json") << to_json(report).dump(2) << "\n";
    std::ofstream(cfg.out_dir / "train_curve.csv") << loss_csv(report);
  }
  return report;
}

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr},
                      {"seconds", e.seconds}});
  nlohmann::json j = {{"variant", to_string(r.variant)},
                      {"initial_val_loss", r.initial_val_loss},
                      {"epochs", epochs},
                      {"best_epoch", r.best_epoch},
                      {"best_val_loss", r.best_val_loss},
                      {"epochs_to_best", r.epochs_to_best},
                      {"early_stopped", r.early_stopped},
                      {"skipped_samples", r.skipped_samples},
                      {"wall_seconds", r.wall_seconds},
                      {"checkpoints", r.checkpoints},
                      {"optimizer_steps", r.step_losses.size()}};
  if (r.stage) j["stage"] = r.stage;
  if (!r.stages.empty()) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : r.stages) stages.push_back(to_json(s));
    j["stages"] = stages;
    j["stage_train_mae"] = r.stage_train_mae;
    j["stage_val_mae"] = r.stage_val_mae;
  }
  return j;
}

std::string loss_csv(const TrainReport& r) {
  std::string out = r.stages.empty() ? "epoch,train_loss,val_loss,lr\n" : "stage,epoch,train_loss,val_loss,lr\n";
  auto rows = [&](const TrainReport& t, const std::string& prefix) {
    for (const auto& e : t.epochs)
      out += fmt::format("{}{},{:.9g},{:.9g},{:.9g}\n", prefix, e.epoch, e.train_loss, e.val_loss, e.lr);
  };
  if (r.stages.empty())
    rows(r, "");
  else
    for (const auto& s : r.stages) rows(s, fmt::format("{},", s.stage));
  return out;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
          {"plateau",
           {{"factor", c.plateau.factor},
            {"patience", c.plateau.patience},
            {"min_lr", c.plateau.min_lr},
            {"threshold", c.plateau.threshold},
            {"metric", "validation_loss"}}},
          {"lambda", c.lambda},
          {"seed", c.seed},
          {"variant", to_string(c.variant)},
          {"crop_height", c.crop_height},
          {"crop_width", c.crop_width},
          {"clip_length", c.clip_length},
          {"feedback", c.feedback},
          {"early_stop_patience", c.early_stop_patience},
          {"max_grad_norm", c.max_grad_norm},
          {"restore_best", c.restore_best},
          {"out_dir", c.out_dir.string()},
          {"checkpoint_every", c.checkpoint_every},
          {"jobs", c.jobs}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "adam") {
        for (const auto& [k, a] : v.items()) {
          if (k == "beta1") c.adam.beta1 = a.get<double>();
          else if (k == "beta2") c.adam.beta2 = a.get<double>();
          else if (k == "epsilon") c.adam.epsilon = a.get<double>();
          else throw ConfigError(fmt::format("unknown train config field 'adam.{}'", k));
        }
      } else if (key == "plateau") {
        for (const auto& [k, p] : v.items()) {
          if (k == "factor") c.plateau.factor = p.get<double>();
          else if (k == "patience") c.plateau.patience = p.get<int>();
          else if (k == "min_lr") c.plateau.min_lr = p.get<double>();
          else if (k == "threshold") c.plateau.threshold = p.get<double>();
          else if (k == "metric") {
            if (p.get<std::string>() != "validation_loss") throw ConfigError("plateau metric must be validation_loss");
          } else throw ConfigError(fmt::format("unknown train config field 'plateau.{}'", k));
        }
      } else if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "variant") c.variant = parse_variant(v.get<std::string>());
      else if (key == "crop_height") c.crop_height = v.get<int>();
      else if (key == "crop_width") c.crop_width = v.get<int>();
      else if (key == "clip_length") c.clip_length = v.get<int>();
      else if (key == "feedback") c.feedback = v.get<bool>();
      else if (key == "early_stop_patience") c.early_stop_patience = v.get<int>();
      else if (key == "max_grad_norm") c.max_grad_norm = v.get<double>();
      else if (key == "restore_best") c.restore_best = v.get<bool>();
      else if (key == "out_dir") c.out_dir = v.get<std::string>();
      else if (key == "checkpoint_every") c.checkpoint_every = v.get<int>();
      else if (key == "jobs") c.jobs = v.get<int>();
      else throw ConfigError(fmt::format("unknown train config field '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed train config: {}", e.what()));
  }
  validate(c);
  return c;
}

}  // namespace nuclass
