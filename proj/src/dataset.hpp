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

#ifndef NUCLASS_DATASET_HPP_
#define NUCLASS_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "train.hpp"

namespace nuclass {

// How a source video becomes paired frames.
struct ExtractionConfig {
  std::filesystem::path source;
  int crf_raw = 13;
  int crf_compressed = 40;
  double sample_fps = 6.0;
  int frame_height = 240;  // 0 keeps the source size
  int frame_width = 320;
  double test_split = 0.111;  // fraction of the tail reserved for testing
  double duration_limit = 0;  // seconds of source to use; 0 = all
  // Pinned encoder settings, recorded in the manifest.
  std::string codec = "libx264";
  std::string preset = "medium";
  std::string pix_fmt = "yuv420p";
  // Optional typical-quality reference encode for the bitrate table.
  std::optional<int> reference_crf;
  std::filesystem::path out_dir = "dataset";
  // Encoder program; empty = $NUCLASS_FFMPEG or "ffmpeg" on PATH.
  std::string ffmpeg;
  // Encode cache; empty = $NUCLASS_CACHE, and no caching if that is unset.
  std::filesystem::path cache_dir;
  int jobs = 1;
};

void validate(const ExtractionConfig& c);
nlohmann::json to_json(const ExtractionConfig& c);
ExtractionConfig extraction_config_from_json(const nlohmann::json& j);

enum class Split { Train, Test };
const char* to_string(Split s);

struct PairedSample {
  std::size_t index = 0;  // position in the manifest
  std::size_t frame = 0;  // decoded frame ordinal in both encodes
  double timestamp = 0;   // seconds, shared by both sides
  std::string compressed;  // paths relative to the manifest directory
  std::string raw;
  std::string compressed_sha256;
  std::string raw_sha256;
  Split split = Split::Train;
};

struct EncodeInfo {
  std::string label;  // "raw", "compressed" or "reference"
  int crf = 0;
  std::string path;   // relative to the manifest directory
  std::uint64_t bytes = 0;
  std::string sha256;
  std::size_t frames = 0;
  std::vector<std::string> command;  // output path shown as {output}
};

struct DatasetManifest {
  ExtractionConfig config;
  std::string source_sha256;
  double source_fps = 0;
  double source_duration = 0;  // seconds covered by the encodes
  int height = 0;
  int width = 0;
  std::vector<EncodeInfo> encodes;  // raw, compressed, then optional reference
  std::vector<std::string> decode_command;
  std::vector<PairedSample> samples;
  std::string checksum;
  std::filesystem::path root;  // directory holding manifest.json (not serialized)

  std::size_t count(Split s) const;
  const EncodeInfo& encode(const std::string& label) const;
};

// Sampling clock: ordinals of the source frames kept when sampling `frames`
// frames at source_fps down to sample_fps (the first frame is always kept).
std::vector<std::size_t> sample_ordinals(std::size_t frames, double source_fps, double sample_fps);
// Number of trailing samples assigned to the test split.
std::size_t test_count(std::size_t samples, double test_split);

// Encodes, extracts, pairs and writes <out_dir>/manifest.json.
DatasetManifest build_dataset(const ExtractionConfig& config);

nlohmann::json to_json(const DatasetManifest& m);
// Digest over the canonical serialization of everything except the checksum.
std::string manifest_checksum(const DatasetManifest& m);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
// Throws StaleError if the stored checksum does not match the contents.
DatasetManifest read_manifest(const std::filesystem::path& path);

// (compressed, raw) frames of one split in manifest order. Every image is
// checked against its recorded digest first.
PairedFrames load_pairs(const DatasetManifest& m, Split split, int jobs = 1);
TrainData load_train_data(const DatasetManifest& m, int jobs = 1);

struct BitrateRow {
  std::string label;
  int crf = 0;
  std::uint64_t bytes = 0;
  double kbps = 0;
  int height = 0;
  int width = 0;
};

struct BitrateReport {
  std::vector<BitrateRow> rows;
  double duration = 0;
  double size_ratio = 0;  // raw bytes / compressed bytes
};

BitrateReport summarize_bitrates(const DatasetManifest& m);
nlohmann::json to_json(const BitrateReport& r);
std::string format_table(const BitrateReport& r);

}  // namespace nuclass

#endif  // NUCLASS_DATASET_HPP_
