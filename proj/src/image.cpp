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


#include "notedetect/image.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= kPngSignature.size() &&
         std::equal(kPngSignature.begin(), kPngSignature.end(), b.begin());
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xff && b[1] == 0xd8 && b[2] == 0xff;
}

// libjpeg only warns on a missing end-of-image marker and OpenCV then returns
// a gray-padded image, so completeness is checked up front.
bool jpeg_is_complete(std::span<const std::uint8_t> b) {
  std::size_t end = b.size();
  while (end > 0 && b[end - 1] == 0x00) --end;
  return end >= 4 && b[end - 2] == 0xff && b[end - 1] == 0xd9;
}

bool png_is_complete(std::span<const std::uint8_t> b) {
  static constexpr char kIend[] = "IEND";
  if (b.size() < kPngSignature.size() + 12) return false;
  return std::memcmp(b.data() + b.size() - 8, kIend, 4) == 0;
}

Image from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image img;
  img.width = rgb.cols;
  img.height = rgb.rows;
  img.channels = 3;
  img.pixels.resize(static_cast<std::size_t>(rgb.cols) * rgb.rows * 3);
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(img.pixels.data() + static_cast<std::size_t>(y) * img.row_stride(), rgb.ptr(y),
                img.row_stride());
  }
  return img;
}

cv::Mat to_bgr(const Image& image) {
  if (image.channels != 3 && image.channels != 1) {
    throw ArgumentError("only 1- or 3-channel images can be encoded");
  }
  const int type = image.channels == 3 ? CV_8UC3 : CV_8UC1;
  cv::Mat view(image.height, image.width, type, const_cast<std::uint8_t*>(image.pixels.data()),
               image.row_stride());
  if (image.channels == 1) return view.clone();
  cv::Mat bgr;
  cv::cvtColor(view, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

std::vector<std::uint8_t> encode(const Image& image, const std::string& ext,
                                 const std::vector<int>& params) {
  if (image.empty()) throw ArgumentError("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  if (!cv::imencode(ext, to_bgr(image), out, params)) {
    throw IoError("image encoding to " + ext + " failed");
  }
  return out;
}

}  // namespace

Image Image::filled(int width, int height, int channels, std::uint8_t value) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.assign(static_cast<std::size_t>(width) * height * channels, value);
  return img;
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) {
    if (!png_is_complete(bytes)) throw ImageDecodeError("truncated PNG stream");
  } else if (is_jpeg(bytes)) {
    if (!jpeg_is_complete(bytes)) throw ImageDecodeError("truncated JPEG stream");
  } else {
    throw ImageDecodeError("not a PNG or JPEG stream");
  }
  cv::Mat decoded;
  try {
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                      const_cast<std::uint8_t*>(bytes.data()));
    decoded = cv::imdecode(raw, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw ImageDecodeError(std::string("image decoding failed: ") + e.what());
  }
  if (decoded.empty()) throw ImageDecodeError("image decoding failed");
  return from_bgr(decoded);
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  try {
    return decode_image(bytes);
  } catch (const ImageDecodeError& e) {
    throw ImageDecodeError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) { return encode(image, ".png", {}); }

std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality) {
  return encode(image, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

bool has_image_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

void write_image(const std::filesystem::path& path, const Image& image) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_file_atomic(path, encode_png(image));
  } else if (ext == ".jpg" || ext == ".jpeg") {
    write_file_atomic(path, encode_jpeg(image));
  } else {
    throw ArgumentError("unsupported image extension '" + ext + "'");
  }
}

}  // namespace notedetect
