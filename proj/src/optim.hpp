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

#ifndef NUCLASS_OPTIM_HPP_
#define NUCLASS_OPTIM_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace nuclass {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. One state slot per parameter buffer.
class Adam {
 public:
  Adam(std::vector<std::size_t> buffer_sizes, AdamConfig config = {});

  void step(std::span<const std::span<float>> params, std::span<const std::span<float>> grads, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  std::uint64_t t_ = 0;
};

struct PlateauConfig {
  double factor = 0.5;
  int patience = 10;
  double min_lr = 1e-6;
  double threshold = 1e-4;  // relative improvement needed to reset patience
};

// Reduce-on-plateau for a minimized metric. The rate drops once the metric
// has failed to improve for more than `patience` consecutive observations.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, PlateauConfig config = {});

  // Feeds one observation and returns the rate to use from now on.
  double observe(double metric);
  double lr() const { return lr_; }
  double best() const { return best_; }

 private:
  PlateauConfig config_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

}  // namespace nuclass

#endif  // NUCLASS_OPTIM_HPP_
