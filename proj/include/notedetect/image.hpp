/*
 * Copyright 2026 The notedetect Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace notedetect {

// 8-bit interleaved image, row-major, RGB channel order after decoding.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  static Image filled(int width, int height, int channels, std::uint8_t value);

  bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }
  std::size_t row_stride() const { return static_cast<std::size_t>(width) * channels; }

  std::uint8_t& at(int x, int y, int c) {
    return pixels[static_cast<std::size_t>(y) * row_stride() + static_cast<std::size_t>(x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[static_cast<std::size_t>(y) * row_stride() + static_cast<std::size_t>(x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Decodes PNG or JPEG bytes into 3-channel RGB. Throws ImageDecodeError for
// anything that is not a complete PNG/JPEG stream (truncated files included).
Image decode_image(std::span<const std::uint8_t> bytes);

// Throws IoError if the file cannot be read, ImageDecodeError if it is not an image.
Image read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);
std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality = 95);

// Encoding is chosen from the extension (.png, .jpg, .jpeg). Atomic write.
void write_image(const std::filesystem::path& path, const Image& image);

bool has_image_extension(const std::filesystem::path& path);

}  // namespace notedetect
