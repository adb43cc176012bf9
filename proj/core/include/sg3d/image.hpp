// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sg3d {

/// Interleaved row-major image.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image<std::uint8_t>;
using Gray16Image = Image<std::uint16_t>;

/// Reads PNG or JPEG (sniffed from the file signature) into 8-bit RGB.
RgbImage read_rgb_image(const std::filesystem::path& path);
/// Reads only the header. Returns {width, height}.
std::pair<int, int> read_image_size(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png16(const std::filesystem::path& path, const Gray16Image& image);
Gray16Image read_png16(const std::filesystem::path& path);

/// In-memory PNG encoding, used by the verification server.
std::vector<std::uint8_t> encode_png(const RgbImage& image);

}  // namespace sg3d
