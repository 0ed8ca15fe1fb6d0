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

#ifndef NUCLASS_CHECKPOINT_HPP_
#define NUCLASS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "model.hpp"
#include "quantize.hpp"

namespace nuclass {

// Archive layout (all integers little-endian):
//   "NUCLSCK1" | u32 version | u32 quantized | u32 total_bits | i32 frac_bits
//   | u64 config length | canonical config JSON | u32 tensor count
//   | per tensor: u32 name length | name | u32 rank | u32 dims[rank] | payload
// The payload is float32 values, or two's-complement codes of total_bits
// each, packed LSB first and padded to a whole byte.
struct ArchiveStats {
  std::uint64_t total_bytes = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t header_bytes() const { return total_bytes - payload_bytes; }
};

std::string serialize_checkpoint(const Model& model, const std::optional<QuantSpec>& quant = std::nullopt,
                                 ArchiveStats* stats = nullptr);
Model deserialize_checkpoint(const std::string& bytes, std::optional<QuantSpec>* quant = nullptr);

// Written to a temporary name, then renamed into place.
void save_checkpoint(const Model& model, const std::filesystem::path& path,
                     const std::optional<QuantSpec>& quant = std::nullopt);
Model load_checkpoint(const std::filesystem::path& path, std::optional<QuantSpec>* quant = nullptr);

}  // namespace nuclass

#endif  // NUCLASS_CHECKPOINT_HPP_
