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

#ifndef NUCLASS_ENHANCE_HPP_
#define NUCLASS_ENHANCE_HPP_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "model.hpp"
#include "tensor.hpp"

namespace nuclass {

enum class Variant { Base, Sequential, Diffusion };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

struct FrameSequence {
  std::vector<FrameTensor> frames;
  double fps = 0;
  std::string source_id;
};

// One model for base and sequential, exactly three stages for diffusion.
class Enhancer {
 public:
  Enhancer(Variant variant, std::vector<std::shared_ptr<const Model>> models);

  Variant variant() const { return variant_; }
  const std::vector<std::shared_ptr<const Model>>& models() const { return models_; }

 private:
  Variant variant_;
  std::vector<std::shared_ptr<const Model>> models_;
};

inline constexpr int kDiffusionStages = 3;

// clamp(frame + residual, 0, 1).
FrameTensor apply_residual(const FrameTensor& frame, const ResidualTensor& residual);

// clamp(compressed + forward(model, compressed), 0, 1).
FrameTensor enhance_frame(const Model& model, const FrameTensor& compressed);

// Base and diffusion run frames on up to `jobs` threads; sequential is a
// single ordered stream. `resets[t]` restarts the sequential feedback at t.
FrameSequence enhance_sequence(const Enhancer& enhancer, const FrameSequence& seq,
                               const std::vector<bool>& resets = {}, int jobs = 1);

// Checks the shape of every frame against frame 0; ShapeError names the index.
void require_uniform_shapes(const std::vector<FrameTensor>& frames, const char* what);

// Writes frames losslessly as <dir>/000000.png, 000001.png, ...
void reassemble_video(const FrameSequence& seq, const std::filesystem::path& dir);
// Reads every *.png of a directory in name order.
FrameSequence read_frame_directory(const std::filesystem::path& dir);

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception wins.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn);

}  // namespace nuclass

#include "parallel.inl"

#endif  // NUCLASS_ENHANCE_HPP_
