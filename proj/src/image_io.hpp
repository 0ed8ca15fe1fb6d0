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

#ifndef NUCLASS_IMAGE_IO_HPP_
#define NUCLASS_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace nuclass {

// 8-bit RGB PNG <-> [0,1] frame. Reading accepts gray, alpha and 16-bit
// images and reduces them to 8-bit RGB; writing rounds v*255 to nearest.
FrameTensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const FrameTensor& frame);

// Interleaved 8-bit RGB (height x width x 3) <-> frame.
FrameTensor frame_from_rgb24(std::span<const std::uint8_t> rgb, int height, int width);
std::vector<std::uint8_t> frame_to_rgb24(const FrameTensor& frame);

// Snaps every value to the nearest multiple of 1/255, as a write/read cycle would.
FrameTensor quantize_8bit(const FrameTensor& frame);

// Zero-padded frame file name, e.g. 000042.png.
std::string frame_file_name(std::size_t index);

}  // namespace nuclass

#endif  // NUCLASS_IMAGE_IO_HPP_
