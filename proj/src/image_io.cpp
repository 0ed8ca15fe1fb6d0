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

#include "image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <fmt/format.h>

#include "error.hpp"

namespace nuclass {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

FrameTensor frame_from_rgb24(std::span<const std::uint8_t> rgb, int height, int width) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  if (rgb.size() != plane * 3)
    throw ShapeError(fmt::format("rgb24 buffer has {} bytes, expected {}", rgb.size(), plane * 3));
  FrameTensor f(Shape{3, height, width});
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) f[c * plane + i] = rgb[3 * i + c] / 255.0f;
  return f;
}

std::vector<std::uint8_t> frame_to_rgb24(const FrameTensor& frame) {
  if (frame.channels() != 3) throw ShapeError("rgb24 export needs a 3-channel frame, got " + frame.shape().str());
  const std::size_t plane = frame.shape().plane();
  std::vector<std::uint8_t> out(plane * 3);
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) out[3 * i + c] = to_byte(frame[c * plane + i]);
  return out;
}

FrameTensor quantize_8bit(const FrameTensor& frame) {
  FrameTensor out(frame.shape());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = to_byte(frame[i]) / 255.0f;
  return out;
}

std::string frame_file_name(std::size_t index) { return fmt::format("{:06d}.png", index); }

FrameTensor read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError(fmt::format("cannot open image '{}'", path.string()));
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError(fmt::format("'{}' is not a PNG file", path.string()));
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  // Declared before setjmp so a libpng longjmp never skips their construction.
  std::vector<std::uint8_t> rgb;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(fmt::format("corrupt PNG '{}'", path.string()));
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_bit_depth(png, info) < 8 && color == PNG_COLOR_TYPE_GRAY) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(fmt::format("unsupported PNG layout in '{}'", path.string()));
  }
  rgb.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = rgb.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return frame_from_rgb24(rgb, static_cast<int>(height), static_cast<int>(width));
}

void write_png(const std::filesystem::path& path, const FrameTensor& frame) {
  const auto rgb = frame_to_rgb24(frame);
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError(fmt::format("cannot write image '{}'", path.string()));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(fmt::format("failed writing PNG '{}'", path.string()));
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, frame.width(), frame.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < frame.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * frame.width() * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw IoError(fmt::format("failed writing PNG '{}'", path.string()));
}

}  // namespace nuclass
