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

#ifndef NUCLASS_TRAIN_HPP_
#define NUCLASS_TRAIN_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "enhance.hpp"
#include "model.hpp"
#include "optim.hpp"

namespace nuclass {

// Aligned (compressed, raw) frames in temporal order.
struct PairedFrames {
  std::vector<FrameTensor> compressed;
  std::vector<FrameTensor> raw;

  std::size_t size() const { return compressed.size(); }
};

struct TrainData {
  PairedFrames train;
  PairedFrames test;  // also serves as the validation split
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 4;
  double learning_rate = 2e-4;
  AdamConfig adam;
  PlateauConfig plateau;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::Base;
  // Random training crops (0 = full frames); must be divisible by the model's size divisor.
  int crop_height = 0;
  int crop_width = 0;
  // Sequential: frames per contiguous clip, and whether the predicted
  // residual is fed forward. Without feedback every frame is its own clip.
  int clip_length = 8;
  bool feedback = true;
  // Stop when validation has not improved for this many epochs (0 = never).
  int early_stop_patience = 0;
  double max_grad_norm = 0;  // global gradient-norm clip per step; 0 disables
  // Put the best-by-validation parameters back into the model at the end.
  bool restore_best = true;
  // Output directory for checkpoints, report JSON and loss CSV (empty = none).
  std::filesystem::path out_dir;
  int checkpoint_every = 1;  // epoch-{N} cadence; 0 keeps only best
  int jobs = 1;              // samples of a batch processed concurrently; results do not depend on it
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;
  double seconds = 0;
};

struct TrainReport {
  Variant variant = Variant::Base;
  int stage = 0;  // diffusion stage (1-based), 0 otherwise
  double initial_val_loss = 0;
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;  // every optimizer step, in order
  int best_epoch = 0;               // 0 = the initial parameters
  double best_val_loss = 0;
  int epochs_to_best = 0;
  bool early_stopped = false;
  std::size_t skipped_samples = 0;  // dropped for a non-finite gradient
  double wall_seconds = 0;
  std::vector<std::string> checkpoints;
  // Diffusion: one report per stage plus the train-split MAE of the cascade
  // after each stage (index 0 = input frames).
  std::vector<TrainReport> stages;
  std::vector<double> stage_train_mae;
  std::vector<double> stage_val_mae;
};

TrainReport train_base(Model& model, const TrainData& data, const TrainConfig& cfg);
TrainReport train_sequential(Model& model, const TrainData& data, const TrainConfig& cfg);
// Stages are trained in order; each later stage sees the frozen cascade's output.
TrainReport train_diffusion(std::array<Model*, 3> stages, const TrainData& data, const TrainConfig& cfg);

// Mean validation loss of the base objective over a split (full frames).
double validation_loss(const Model& model, const PairedFrames& split, double lambda, int jobs = 1);

nlohmann::json to_json(const TrainReport& r);
std::string loss_csv(const TrainReport& r);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace nuclass

#endif  // NUCLASS_TRAIN_HPP_
