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

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "digest.hpp"
#include "enhance.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "process.hpp"

namespace nuclass {

namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string ffmpeg_program(const ExtractionConfig& c) {
  return c.ffmpeg.empty() ? env_or("NUCLASS_FFMPEG", "ffmpeg") : c.ffmpeg;
}

fs::path cache_dir(const ExtractionConfig& c) {
  return c.cache_dir.empty() ? fs::path(env_or("NUCLASS_CACHE", "")) : c.cache_dir;
}

struct Probe {
  double fps = 0;
  double duration = 0;
};

Probe probe(const std::string& ffmpeg, const fs::path& source) {
  std::string err;
  run_process({ffmpeg, "-nostdin", "-hide_banner", "-i", source.string(), "-map", "0:v:0", "-c", "copy", "-f", "null",
               "-"},
              {}, &err);
  Probe p;
  std::smatch m;
  if (std::regex_search(err, m, std::regex(R"(Duration: (\d+):(\d+):(\d+(?:\.\d+)?))")))
    p.duration = std::stod(m[1]) * 3600 + std::stod(m[2]) * 60 + std::stod(m[3]);
  if (std::regex_search(err, m, std::regex(R"(Video:.*?, (\d+(?:\.\d+)?)(k?) fps)")))
    p.fps = std::stod(m[1]) * (m[2] == "k" ? 1000 : 1);
  else if (std::regex_search(err, m, std::regex(R"(Video:.*?, (\d+(?:\.\d+)?)(k?) tbr)")))
    p.fps = std::stod(m[1]) * (m[2] == "k" ? 1000 : 1);
  if (!(p.fps > 0)) throw IoError(fmt::format("cannot determine the frame rate of '{}'", source.string()));
  return p;
}

std::vector<std::string> encode_args(const ExtractionConfig& c, const std::string& ffmpeg, int crf,
                                     const std::string& output) {
  std::vector<std::string> a = {ffmpeg, "-nostdin", "-y", "-v", "error", "-i", c.source.string()};
  if (c.duration_limit > 0) {
    a.push_back("-t");
    a.push_back(fmt::format("{}", c.duration_limit));
  }
  a.insert(a.end(), {"-map", "0:v:0", "-an", "-sn"});
  if (c.frame_height > 0) {
    a.push_back("-vf");
    a.push_back(fmt::format("scale={}:{}:flags=bicubic", c.frame_width, c.frame_height));
  }
  a.insert(a.end(), {"-c:v", c.codec, "-preset", c.preset, "-crf", std::to_string(crf), "-pix_fmt", c.pix_fmt,
                     "-threads", "1", "-fflags", "+bitexact", "-flags:v", "+bitexact", "-map_metadata", "-1",
                     "-f", "mp4", output});
  return a;
}

std::vector<std::string> decode_args(const std::string& ffmpeg, const std::string& input) {
  return {ffmpeg, "-nostdin", "-v", "error", "-i", input, "-map", "0:v:0", "-f", "rawvideo", "-pix_fmt", "rgb24", "-"};
}

std::vector<std::string> with_placeholder(std::vector<std::string> argv, const std::string& path,
                                          const std::string& placeholder) {
  for (auto& a : argv)
    if (a == path) a = placeholder;
  return argv;
}

// Encodes at one CRF into `dest`, reusing the cache when one is configured.
EncodeInfo encode(const ExtractionConfig& c, const std::string& ffmpeg, const std::string& source_sha,
                  const std::string& label, int crf, const fs::path& root) {
  EncodeInfo info;
  info.label = label;
  info.crf = crf;
  info.path = fmt::format("encodes/{}-crf{}.mp4", label, crf);
  const fs::path dest = root / info.path;
  info.command = with_placeholder(encode_args(c, ffmpeg, crf, dest.string()), dest.string(), "{output}");
  info.command[0] = "ffmpeg";

  const fs::path cache = cache_dir(c);
  auto run_to = [&](const fs::path& out) {
    const fs::path tmp = out.string() + ".part";
    spdlog::info("encoding {} (crf {})", label, crf);
    run_process(encode_args(c, ffmpeg, crf, tmp.string()));
    fs::rename(tmp, out);
  };
  if (cache.empty()) {
    run_to(dest);
  } else {
    fs::create_directories(cache);
    const std::string key = sha256_hex(source_sha + "\n" + command_line(with_placeholder(
                                                                  info.command, c.source.string(), "{source}")));
    const fs::path cached = cache / (key.substr(0, 32) + ".mp4");
    if (fs::exists(cached))
      spdlog::info("reusing cached {} encode {}", label, cached.string());
    else
      run_to(cached);
    fs::copy_file(cached, dest, fs::copy_options::overwrite_existing);
  }
  info.bytes = fs::file_size(dest);
  info.sha256 = sha256_file(dest);
  return info;
}

struct Extracted {
  std::size_t decoded = 0;
  std::vector<std::string> digests;  // per selected frame
};

// Decodes an encode and writes the frames at `ordinals` as PNGs into dir.
Extracted extract(const std::string& ffmpeg, const fs::path& video, int height, int width,
                  const std::vector<std::size_t>& ordinals, const fs::path& dir, int jobs) {
  const std::size_t frame_bytes = static_cast<std::size_t>(height) * width * 3;
  Extracted out;
  std::vector<unsigned char> frame;
  frame.reserve(frame_bytes);
  std::vector<std::pair<std::size_t, std::vector<unsigned char>>> pending;
  std::size_t next = 0;
  auto flush = [&] {
    std::vector<std::string> digests(pending.size());
    parallel_for(pending.size(), jobs, [&](std::size_t i) {
      const auto& [slot, rgb] = pending[i];
      const fs::path path = dir / frame_file_name(slot);
      write_png(path, frame_from_rgb24(rgb, height, width));
      digests[i] = sha256_file(path);
    });
    out.digests.insert(out.digests.end(), digests.begin(), digests.end());
    pending.clear();
  };
  run_process(decode_args(ffmpeg, video.string()), [&](std::span<const unsigned char> chunk) {
    while (!chunk.empty()) {
      const std::size_t take = std::min(chunk.size(), frame_bytes - frame.size());
      frame.insert(frame.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(take));
      chunk = chunk.subspan(take);
      if (frame.size() < frame_bytes) break;
      if (next < ordinals.size() && ordinals[next] == out.decoded) {
        pending.emplace_back(next++, std::move(frame));
        if (pending.size() >= 64) flush();
      }
      frame.clear();
      frame.reserve(frame_bytes);
      ++out.decoded;
    }
  });
  if (!frame.empty())
    throw IoError(fmt::format("'{}' ended with a partial frame ({} of {} bytes)", video.string(), frame.size(),
                              frame_bytes));
  flush();
  return out;
}

// Frame geometry of an encode, read from its first decoded frame line.
std::pair<int, int> encoded_size(const std::string& ffmpeg, const fs::path& video) {
  std::string err;
  run_process({ffmpeg, "-nostdin", "-hide_banner", "-i", video.string(), "-map", "0:v:0", "-c", "copy", "-f", "null",
               "-"},
              {}, &err);
  std::smatch m;
  if (!std::regex_search(err, m, std::regex(R"(Video:.*?, (\d+)x(\d+))")))
    throw IoError(fmt::format("cannot determine the frame size of '{}'", video.string()));
  return {std::stoi(m[2]), std::stoi(m[1])};
}

void reset_dir(const fs::path& d) {
  std::error_code ec;
  fs::remove_all(d, ec);
  fs::create_directories(d);
}

}  // namespace

void validate(const ExtractionConfig& c) {
  if (c.crf_raw < 0 || c.crf_raw >= c.crf_compressed || c.crf_compressed > 51)
    throw ConfigError(fmt::format("crf values must satisfy 0 <= crf_raw < crf_compressed <= 51 (got {} and {})",
                                  c.crf_raw, c.crf_compressed));
  if (c.reference_crf && (*c.reference_crf < 0 || *c.reference_crf > 51))
    throw ConfigError("reference_crf must be in [0, 51]");
  if (!(c.sample_fps > 0)) throw ConfigError("sample_fps must be positive");
  if (!(c.test_split > 0 && c.test_split < 1)) throw ConfigError("test_split must be in (0, 1)");
  if (c.frame_height < 0 || c.frame_width < 0 || (c.frame_height == 0) != (c.frame_width == 0))
    throw ConfigError("frame_size must be two positive values, or 0x0 to keep the source size");
  if (c.frame_height % 2 || c.frame_width % 2) throw ConfigError("frame_size must be even for 4:2:0 encoding");
  if (c.duration_limit < 0) throw ConfigError("duration_limit must be >= 0");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
}

const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [s](const PairedSample& p) { return p.split == s; }));
}

const EncodeInfo& DatasetManifest::encode(const std::string& label) const {
  for (const auto& e : encodes)
    if (e.label == label) return e;
  throw PreconditionError(fmt::format("manifest has no '{}' encode", label));
}

std::vector<std::size_t> sample_ordinals(std::size_t frames, double source_fps, double sample_fps) {
  if (!(sample_fps > 0) || !(source_fps > 0)) throw ConfigError("frame rates must be positive");
  if (sample_fps > source_fps * (1 + 1e-9))
    throw ConfigError(fmt::format("sample_fps {} exceeds the source frame rate {}", sample_fps, source_fps));
  std::vector<std::size_t> out;
  const double step = source_fps / sample_fps;
  for (std::size_t k = 0;; ++k) {
    const auto i = static_cast<std::size_t>(std::llround(static_cast<double>(k) * step));
    if (i >= frames) break;
    out.push_back(i);
  }
  return out;
}

std::size_t test_count(std::size_t samples, double test_split) {
  // The epsilon keeps exact products (e.g. 0.25 * 8) from rounding down.
  return static_cast<std::size_t>(std::floor(test_split * static_cast<double>(samples) + 1e-9));
}

DatasetManifest build_dataset(const ExtractionConfig& config) {
  validate(config);
  std::error_code ec;
  if (!fs::is_regular_file(config.source, ec))
    throw ConfigError(fmt::format("source video '{}' does not exist", config.source.string()));
  const std::string ffmpeg = ffmpeg_program(config);
  const Probe pr = probe(ffmpeg, config.source);
  if (config.sample_fps > pr.fps * (1 + 1e-9))
    throw ConfigError(fmt::format("sample_fps {} exceeds the source frame rate {}", config.sample_fps, pr.fps));

  DatasetManifest m;
  m.config = config;
  m.root = config.out_dir;
  m.source_sha256 = sha256_file(config.source);
  m.source_fps = pr.fps;
  fs::create_directories(m.root);
  fs::create_directories(m.root / "encodes");

  m.encodes.push_back(encode(config, ffmpeg, m.source_sha256, "raw", config.crf_raw, m.root));
  m.encodes.push_back(encode(config, ffmpeg, m.source_sha256, "compressed", config.crf_compressed, m.root));
  if (config.reference_crf)
    m.encodes.push_back(encode(config, ffmpeg, m.source_sha256, "reference", *config.reference_crf, m.root));

  const auto [h, w] = encoded_size(ffmpeg, m.root / m.encodes[0].path);
  m.height = h;
  m.width = w;
  m.decode_command = decode_args("ffmpeg", "{input}");

  // Count frames first so the sampling clock is fixed before anything is written.
  std::size_t counts[2] = {0, 0};
  for (int side = 0; side < 2; ++side)
    run_process(decode_args(ffmpeg, (m.root / m.encodes[side].path).string()),
                [&](std::span<const unsigned char> chunk) { counts[side] += chunk.size(); });
  const std::size_t frame_bytes = static_cast<std::size_t>(h) * w * 3;
  for (auto& n : counts) n /= frame_bytes;
  if (counts[0] != counts[1])
    throw AlignmentError(fmt::format("frame count mismatch between encodes: raw has {}, compressed has {}", counts[0],
                                     counts[1]));
  m.encodes[0].frames = m.encodes[1].frames = counts[0];
  m.source_duration = static_cast<double>(counts[0]) / pr.fps;

  const auto ordinals = sample_ordinals(counts[0], pr.fps, config.sample_fps);
  if (ordinals.empty()) throw IoError(fmt::format("'{}' decoded to no frames", config.source.string()));
  const char* sides[2] = {"raw", "compressed"};
  Extracted ex[2];
  for (int side = 0; side < 2; ++side) {
    reset_dir(m.root / sides[side]);
    spdlog::info("extracting {} {} frames", ordinals.size(), sides[side]);
    ex[side] = extract(ffmpeg, m.root / m.encodes[side].path, h, w, ordinals, m.root / sides[side], config.jobs);
    if (ex[side].digests.size() != ordinals.size())
      throw AlignmentError(fmt::format("{} encode yielded {} sampled frames, expected {}", sides[side],
                                       ex[side].digests.size(), ordinals.size()));
  }
  if (config.reference_crf) {
    std::size_t n = 0;
    run_process(decode_args(ffmpeg, (m.root / m.encodes[2].path).string()),
                [&](std::span<const unsigned char> chunk) { n += chunk.size(); });
    m.encodes[2].frames = n / frame_bytes;
  }

  const std::size_t n_test = test_count(ordinals.size(), config.test_split);
  for (std::size_t k = 0; k < ordinals.size(); ++k) {
    PairedSample s;
    s.index = k;
    s.frame = ordinals[k];
    s.timestamp = static_cast<double>(ordinals[k]) / pr.fps;
    s.raw = (fs::path("raw") / frame_file_name(k)).generic_string();
    s.compressed = (fs::path("compressed") / frame_file_name(k)).generic_string();
    s.raw_sha256 = ex[0].digests[k];
    s.compressed_sha256 = ex[1].digests[k];
    s.split = k + n_test >= ordinals.size() ? Split::Test : Split::Train;
    m.samples.push_back(std::move(s));
  }
  m.checksum = manifest_checksum(m);
  write_manifest(m, m.root / "manifest.json");
  spdlog::info("dataset: {} pairs ({} train, {} test) at {}x{}", m.samples.size(), m.count(Split::Train),
               m.count(Split::Test), w, h);
  return m;
}

nlohmann::json to_json(const ExtractionConfig& c) {
  nlohmann::json j = {{"source", c.source.string()},
                      {"crf_raw", c.crf_raw},
                      {"crf_compressed", c.crf_compressed},
                      {"sample_fps", c.sample_fps},
                      {"frame_height", c.frame_height},
                      {"frame_width", c.frame_width},
                      {"test_split", c.test_split},
                      {"duration_limit", c.duration_limit},
                      {"codec", c.codec},
                      {"preset", c.preset},
                      {"pix_fmt", c.pix_fmt},
                      {"out_dir", c.out_dir.string()}};
  j["reference_crf"] = c.reference_crf ? nlohmann::json(*c.reference_crf) : nlohmann::json(nullptr);
  return j;
}

ExtractionConfig extraction_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("dataset config must be a JSON object");
  ExtractionConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "source") c.source = v.get<std::string>();
      else if (key == "crf_raw") c.crf_raw = v.get<int>();
      else if (key == "crf_compressed") c.crf_compressed = v.get<int>();
      else if (key == "sample_fps") c.sample_fps = v.get<double>();
      else if (key == "frame_height") c.frame_height = v.get<int>();
      else if (key == "frame_width") c.frame_width = v.get<int>();
      else if (key == "test_split") c.test_split = v.get<double>();
      else if (key == "duration_limit") c.duration_limit = v.get<double>();
      else if (key == "codec") c.codec = v.get<std::string>();
      else if (key == "preset") c.preset = v.get<std::string>();
      else if (key == "pix_fmt") c.pix_fmt = v.get<std::string>();
      else if (key == "reference_crf") {
        if (!v.is_null()) c.reference_crf = v.get<int>();
      } else if (key == "out_dir") c.out_dir = v.get<std::string>();
      else if (key == "ffmpeg") c.ffmpeg = v.get<std::string>();
      else if (key == "cache_dir") c.cache_dir = v.get<std::string>();
      else if (key == "jobs") c.jobs = v.get<int>();
      else throw ConfigError(fmt::format("unknown dataset config field '{}'", key));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed dataset config: {}", e.what()));
  }
  validate(c);
  return c;
}

namespace {

nlohmann::json body_json(const DatasetManifest& m) {
  nlohmann::json encodes = nlohmann::json::array();
  for (const auto& e : m.encodes)
    encodes.push_back({{"label", e.label},
                       {"crf", e.crf},
                       {"path", e.path},
                       {"bytes", e.bytes},
                       {"sha256", e.sha256},
                       {"frames", e.frames},
                       {"command", e.command}});
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : m.samples)
    samples.push_back({{"index", s.index},
                       {"frame", s.frame},
                       {"timestamp", s.timestamp},
                       {"compressed", s.compressed},
                       {"raw", s.raw},
                       {"compressed_sha256", s.compressed_sha256},
                       {"raw_sha256", s.raw_sha256},
                       {"split", to_string(s.split)}});
  // The manifest's own location is not part of its identity.
  nlohmann::json config = to_json(m.config);
  config.erase("out_dir");
  return {{"schema_version", kSchemaVersion},
          {"config", config},
          {"source", {{"sha256", m.source_sha256}, {"fps", m.source_fps}}},
          {"source_duration", m.source_duration},
          {"frame_size", {m.height, m.width}},
          {"encodes", encodes},
          {"decode_command", m.decode_command},
          {"train_count", m.count(Split::Train)},
          {"test_count", m.count(Split::Test)},
          {"samples", samples}};
}

}  // namespace

std::string manifest_checksum(const DatasetManifest& m) { return sha256_hex(body_json(m).dump()); }

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json j = body_json(m);
  j["checksum"] = m.checksum;
  return j;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    out << to_json(m).dump(2) << "\n";
    if (!out) throw IoError(fmt::format("write failed for '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read manifest '{}'", path.string()));
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw ConfigError(fmt::format("unsupported manifest schema_version {}", j.at("schema_version").dump()));
    m.config = extraction_config_from_json(j.at("config"));
    m.source_sha256 = j.at("source").at("sha256").get<std::string>();
    m.source_fps = j.at("source").at("fps").get<double>();
    m.source_duration = j.at("source_duration").get<double>();
    m.height = j.at("frame_size").at(0).get<int>();
    m.width = j.at("frame_size").at(1).get<int>();
    for (const auto& e : j.at("encodes"))
      m.encodes.push_back({e.at("label").get<std::string>(), e.at("crf").get<int>(), e.at("path").get<std::string>(),
                           e.at("bytes").get<std::uint64_t>(), e.at("sha256").get<std::string>(),
                           e.at("frames").get<std::size_t>(), e.at("command").get<std::vector<std::string>>()});
    m.decode_command = j.at("decode_command").get<std::vector<std::string>>();
    for (const auto& s : j.at("samples")) {
      PairedSample p;
      p.index = s.at("index").get<std::size_t>();
      p.frame = s.at("frame").get<std::size_t>();
      p.timestamp = s.at("timestamp").get<double>();
      p.compressed = s.at("compressed").get<std::string>();
      p.raw = s.at("raw").get<std::string>();
      p.compressed_sha256 = s.at("compressed_sha256").get<std::string>();
      p.raw_sha256 = s.at("raw_sha256").get<std::string>();
      const auto split = s.at("split").get<std::string>();
      if (split != "train" && split != "test") throw ConfigError(fmt::format("bad split '{}'", split));
      p.split = split == "train" ? Split::Train : Split::Test;
      m.samples.push_back(std::move(p));
    }
    m.checksum = j.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("malformed manifest '{}': {}", path.string(), e.what()));
  }
  m.root = path.parent_path();
  if (manifest_checksum(m) != m.checksum)
    throw StaleError(fmt::format("manifest '{}' does not match its checksum", path.string()));
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    if (i > 0 && !(m.samples[i].timestamp > m.samples[i - 1].timestamp))
      throw StaleError(fmt::format("sample {}: timestamps not increasing", i));
    if (i > 0 && m.samples[i - 1].split == Split::Test && m.samples[i].split == Split::Train)
      throw StaleError(fmt::format("sample {}: train sample after the test boundary", i));
  }
  return m;
}

PairedFrames load_pairs(const DatasetManifest& m, Split split, int jobs) {
  if (manifest_checksum(m) != m.checksum) throw StaleError("manifest does not match its checksum");
  std::vector<const PairedSample*> picked;
  for (const auto& s : m.samples)
    if (s.split == split) picked.push_back(&s);
  PairedFrames out;
  out.compressed.resize(picked.size());
  out.raw.resize(picked.size());
  parallel_for(picked.size(), jobs, [&](std::size_t i) {
    const PairedSample& s = *picked[i];
    auto load = [&](const std::string& rel, const std::string& digest) {
      const fs::path p = m.root / rel;
      std::string actual;
      try {
        actual = sha256_file(p);
      } catch (const IoError& e) {
        throw IoError(fmt::format("sample {}: {}", s.index, e.what()));
      }
      if (actual != digest) throw StaleError(fmt::format("sample {}: '{}' changed since the manifest was written",
                                                         s.index, p.string()));
      try {
        return read_png(p);
      } catch (const Error& e) {
        throw IoError(fmt::format("sample {}: {}", s.index, e.what()));
      }
    };
    out.compressed[i] = load(s.compressed, s.compressed_sha256);
    out.raw[i] = load(s.raw, s.raw_sha256);
    if (out.compressed[i].shape() != out.raw[i].shape())
      throw AlignmentError(fmt::format("sample {}: compressed {} vs raw {}", s.index, out.compressed[i].shape().str(),
                                       out.raw[i].shape().str()));
  });
  return out;
}

TrainData load_train_data(const DatasetManifest& m, int jobs) {
  return {load_pairs(m, Split::Train, jobs), load_pairs(m, Split::Test, jobs)};
}

BitrateReport summarize_bitrates(const DatasetManifest& m) {
  BitrateReport r;
  r.duration = m.source_duration;
  if (!(r.duration > 0)) throw PreconditionError("manifest has no duration");
  for (const auto& e : m.encodes) {
    const fs::path p = m.root / e.path;
    std::error_code ec;
    const auto bytes = fs::file_size(p, ec);
    if (ec) throw IoError(fmt::format("encode '{}' is missing: {}", p.string(), ec.message()));
    r.rows.push_back({e.label, e.crf, bytes, static_cast<double>(bytes) * 8.0 / r.duration / 1000.0, m.height,
                      m.width});
  }
  const auto& raw = r.rows.at(0);
  const auto& comp = r.rows.at(1);
  r.size_ratio = static_cast<double>(raw.bytes) / static_cast<double>(comp.bytes);
  return r;
}

nlohmann::json to_json(const BitrateReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"label", row.label},
                    {"crf", row.crf},
                    {"bytes", row.bytes},
                    {"bitrate_kbps", row.kbps},
                    {"height", row.height},
                    {"width", row.width}});
  return {{"rows", rows}, {"duration_seconds", r.duration}, {"size_ratio", r.size_ratio}};
}

std::string format_table(const BitrateReport& r) {
  std::string out = fmt::format("{:<12} {:>4} {:>12} {:>14} {:>11}\n", "encode", "crf", "bitrate kb/s", "size", "resolution");
  for (const auto& row : r.rows)
    out += fmt::format("{:<12} {:>4} {:>12.1f} {:>11.2f} MB {:>11}\n", row.label, row.crf, row.kbps,
                       static_cast<double>(row.bytes) / 1e6, fmt::format("{}x{}", row.width, row.height));
  out += fmt::format("size ratio raw/compressed: {:.2f}x over {:.2f} s\n", r.size_ratio, r.duration);
  return out;
}

}  // namespace nuclass
