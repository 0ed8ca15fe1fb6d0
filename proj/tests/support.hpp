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

#ifndef NUCLASS_TESTS_SUPPORT_HPP_
#define NUCLASS_TESTS_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "model.hpp"

namespace nuclass::testing {

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_rel = 0;
  std::string worst;
};

// Randomizes every parameter (including the zero-initialized ones) so that
// all gradients are generically nonzero.
void randomize(BasicModel<double>& model, std::mt19937_64& rng);

// Central-difference check of the pixel loss gradient on a random frame.
// Relative error is |a - n| / max(|a|, |n|, floor).
// Parameters are sampled evenly so that roughly `samples` entries are
// checked, always including every entry of small tensors.
GradCheckResult gradient_check(const ModelConfig& config, int height, int width, std::uint64_t seed,
                               std::size_t samples, double step = 1e-4, double tol = 1e-3, double floor = 1e-7);

// Footprint of one output column on the input, measured by backpropagating
// a one-hot gradient through the network run as a positive linear map.
long brute_force_receptive_field(const ModelConfig& config);
long brute_force_receptive_field(const std::vector<ConvSpec>& chain);

Tensor random_frame(Shape shape, std::mt19937_64& rng);

// Writes a procedural test clip (cellular automaton with fading trails,
// lossless-ish CRF 0 H.264) so tests do not depend on external media.
void make_test_video(const std::filesystem::path& path, double seconds, int width, int height, int fps,
                     std::uint64_t seed);

// Concatenates one `segment`-second life clip per seed, each starting
// `skip` seconds in, so every segment has the same statistics and a
// tail split looks like the head.
void make_life_montage(const std::filesystem::path& path, const std::vector<std::uint64_t>& seeds, double segment,
                       double skip, int width, int height, int fps);

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace nuclass::testing

#endif  // NUCLASS_TESTS_SUPPORT_HPP_
