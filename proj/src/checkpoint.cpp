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

#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "error.hpp"

namespace nuclass {

namespace {

constexpr char kMagic[8] = {'N', 'U', 'C', 'L', 'S', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  std::string& data() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  const char* take(std::size_t n) {
    if (n > in_.size() - pos_) throw IoError("checkpoint is truncated");
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(4));
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(8));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
  }
  std::string str(std::size_t limit = 1 << 20) {
    const std::uint32_t n = u32();
    if (n > limit) throw IoError("checkpoint string field is implausibly long");
    return std::string(take(n), n);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

void pack_codes(Writer& w, std::span<const float> values, const QuantSpec& q, const std::string& name) {
  const int bits = q.total_bits;
  const std::uint64_t mask = bits == 64 ? ~0ull : ((1ull << bits) - 1);
  std::uint64_t acc = 0;
  int filled = 0;
  for (float v : values) {
    const std::int64_t code = quantize_code(v, q, name);
    if (dequantize_code(code, q) != static_cast<double>(v))
      throw RangeError(fmt::format("tensor '{}' holds values off the {}-bit grid with {} fractional bits", name,
                                   q.total_bits, q.frac_bits));
    acc |= (static_cast<std::uint64_t>(code) & mask) << filled;
    filled += bits;
    while (filled >= 8) {
      const char byte = static_cast<char>(acc & 0xff);
      w.bytes(&byte, 1);
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) {
    const char byte = static_cast<char>(acc & 0xff);
    w.bytes(&byte, 1);
  }
}

void unpack_codes(Reader& r, std::span<float> values, const QuantSpec& q) {
  const int bits = q.total_bits;
  const std::size_t n = (values.size() * bits + 7) / 8;
  const auto* p = reinterpret_cast<const unsigned char*>(r.take(n));
  std::uint64_t acc = 0;
  int filled = 0;
  std::size_t at = 0;
  for (auto& v : values) {
    while (filled < bits) {
      acc |= std::uint64_t{p[at++]} << filled;
      filled += 8;
    }
    std::uint64_t raw = acc & ((1ull << bits) - 1);
    acc >>= bits;
    filled -= bits;
    std::int64_t code = static_cast<std::int64_t>(raw);
    if (raw >> (bits - 1)) code -= std::int64_t{1} << bits;
    v = static_cast<float>(dequantize_code(code, q));
  }
}

}  // namespace

std::string serialize_checkpoint(const Model& model, const std::optional<QuantSpec>& quant, ArchiveStats* stats) {
  if (quant) validate(*quant);
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(quant ? 1 : 0);
  w.u32(quant ? quant->total_bits : 32);
  w.u32(static_cast<std::uint32_t>(quant ? quant->frac_bits : 0));
  const std::string config = to_json(model.config()).dump();
  w.u64(config.size());
  w.bytes(config.data(), config.size());
  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  std::uint64_t payload = 0;
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.dims.size()));
    for (int d : p.dims) w.u32(static_cast<std::uint32_t>(d));
    const std::size_t before = w.data().size();
    if (quant) {
      pack_codes(w, p.values, *quant, p.name);
    } else {
      for (float v : p.values) w.u32(std::bit_cast<std::uint32_t>(v));
    }
    payload += w.data().size() - before;
  }
  if (stats) {
    stats->total_bytes = w.data().size();
    stats->payload_bytes = payload;
  }
  return std::move(w.data());
}

Model deserialize_checkpoint(const std::string& bytes, std::optional<QuantSpec>* quant) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) throw IoError("not a nuclass checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw IoError(fmt::format("unsupported checkpoint version {}", version));
  const bool quantized = r.u32() != 0;
  QuantSpec q;
  q.total_bits = static_cast<int>(r.u32());
  q.frac_bits = static_cast<std::int32_t>(r.u32());
  if (quantized) validate(q);
  const std::uint64_t config_len = r.u64();
  if (config_len > (1u << 20)) throw IoError("checkpoint config block is implausibly long");
  nlohmann::json config_json;
  try {
    config_json = nlohmann::json::parse(std::string(r.take(config_len), config_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("checkpoint config is not valid JSON: {}", e.what()));
  }
  Model model(model_config_from_json(config_json));
  auto params = model.parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size())
    throw ShapeError(fmt::format("checkpoint has {} tensors, config implies {}", count, params.size()));
  for (auto& p : params) {
    const std::string name = r.str();
    if (name != p.name) throw ShapeError(fmt::format("checkpoint tensor '{}' found where '{}' expected", name, p.name));
    const std::uint32_t rank = r.u32();
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(r.u32());
    if (dims != p.dims) throw ShapeError(fmt::format("checkpoint tensor '{}' has the wrong shape", name));
    if (quantized) {
      unpack_codes(r, p.values, q);
    } else {
      for (auto& v : p.values) v = std::bit_cast<float>(r.u32());
    }
  }
  if (!r.done()) throw IoError("checkpoint has trailing bytes");
  if (quant) *quant = quantized ? std::optional<QuantSpec>(q) : std::nullopt;
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, const std::optional<QuantSpec>& quant) {
  const std::string bytes = serialize_checkpoint(model, quant);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write checkpoint '{}'", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("failed writing checkpoint '{}'", path.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move checkpoint into '{}': {}", path.string(), ec.message()));
}

Model load_checkpoint(const std::filesystem::path& path, std::optional<QuantSpec>* quant) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str(), quant);
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace nuclass
