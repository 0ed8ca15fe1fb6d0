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

#include "enhance.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "error.hpp"
#include "image_io.hpp"

namespace nuclass {

Variant parse_variant(const std::string& name) {
  if (name == "base") return Variant::Base;
  if (name == "sequential") return Variant::Sequential;
  if (name == "diffusion") return Variant::Diffusion;
  throw ConfigError(fmt::format("unknown variant '{}' (expected base, sequential or diffusion)", name));
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::Sequential: return "sequential";
    case Variant::Diffusion: return "diffusion";
  }
  return "unknown";
}

Enhancer::Enhancer(Variant variant, std::vector<std::shared_ptr<const Model>> models)
    : variant_(variant), models_(std::move(models)) {
  const std::size_t want = variant == Variant::Diffusion ? kDiffusionStages : 1;
  if (models_.size() != want)
    throw ConfigError(fmt::format("{} variant needs exactly {} model(s), got {}", to_string(variant), want,
                                  models_.size()));
  for (const auto& m : models_)
    if (!m) throw ConfigError("enhancer model is null");
  for (const auto& m : models_)
    if (m->config().image_channels != models_.front()->config().image_channels ||
        m->config().size_divisor() != models_.front()->config().size_divisor())
      throw ConfigError("diffusion stages must share one input/output shape contract");
}

FrameTensor apply_residual(const FrameTensor& frame, const ResidualTensor& residual) {
  require_same_shape(frame.shape(), residual.shape(), "apply_residual");
  FrameTensor out(frame.shape());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = std::clamp(frame[i] + residual[i], 0.0f, 1.0f);
  return out;
}

FrameTensor enhance_frame(const Model& model, const FrameTensor& compressed) {
  return apply_residual(compressed, model.forward(compressed));
}

void require_uniform_shapes(const std::vector<FrameTensor>& frames, const char* what) {
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].shape() != frames.front().shape())
      throw ShapeError(fmt::format("{}: frame {} has shape {}, frame 0 has {}", what, i, frames[i].shape().str(),
                                   frames.front().shape().str()));
}

FrameSequence enhance_sequence(const Enhancer& enhancer, const FrameSequence& seq, const std::vector<bool>& resets,
                               int jobs) {
  if (seq.frames.empty()) throw PreconditionError("enhance_sequence: empty sequence");
  require_uniform_shapes(seq.frames, "enhance_sequence");
  if (!resets.empty() && resets.size() != seq.frames.size())
    throw ConfigError(fmt::format("reset flags cover {} frames, sequence has {}", resets.size(), seq.frames.size()));
  FrameSequence out{std::vector<FrameTensor>(seq.frames.size()), seq.fps, seq.source_id};
  const auto& models = enhancer.models();
  switch (enhancer.variant()) {
    case Variant::Base:
      parallel_for(seq.frames.size(), jobs, [&](std::size_t i) { out.frames[i] = enhance_frame(*models[0], seq.frames[i]); });
      break;
    case Variant::Diffusion:
      parallel_for(seq.frames.size(), jobs, [&](std::size_t i) {
        FrameTensor x = seq.frames[i];
        for (const auto& m : models) x = enhance_frame(*m, x);
        out.frames[i] = std::move(x);
      });
      break;
    case Variant::Sequential: {
      ResidualTensor previous;
      for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const bool restart = t == 0 || (!resets.empty() && resets[t]);
        const FrameTensor input = restart ? seq.frames[t] : apply_residual(seq.frames[t], previous);
        ResidualTensor r = models[0]->forward(input);
        out.frames[t] = apply_residual(input, r);
        previous = std::move(r);
      }
      break;
    }
  }
  return out;
}

void reassemble_video(const FrameSequence& seq, const std::filesystem::path& dir) {
  if (seq.frames.empty()) throw PreconditionError("reassemble_video: empty sequence");
  require_uniform_shapes(seq.frames, "reassemble_video");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  for (std::size_t i = 0; i < seq.frames.size(); ++i) write_png(dir / frame_file_name(i), seq.frames[i]);
}

FrameSequence read_frame_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  FrameSequence seq;
  seq.source_id = dir.string();
  for (const auto& f : files) seq.frames.push_back(read_png(f));
  return seq;
}

}  // namespace nuclass
