// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "sg3d/types.hpp"

namespace sg3d {

struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0, x1) x [y0, y1)
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

/// Binary mask over a full frame. Only a region of interest is stored; pixels
/// outside it are zero. Equality compares frame size and content, not the
/// stored region.
class BinaryMask {
 public:
  BinaryMask() = default;
  /// All-zero mask whose writable region is the whole frame.
  BinaryMask(int width, int height);
  /// All-zero mask writable only inside `roi` (clipped to the frame).
  BinaryMask(int width, int height, PixelBox roi);
  static BinaryMask from_dense(int width, int height, const std::vector<std::uint8_t>& dense);

  int width() const { return width_; }
  int height() const { return height_; }
  const PixelBox& roi() const { return roi_; }

  bool at(int x, int y) const {
    if (!roi_.contains(x, y)) return false;
    return bits_[static_cast<std::size_t>(y - roi_.y0) * roi_.width() + (x - roi_.x0)] != 0;
  }
  /// Writes inside the region of interest; throws kOutOfRange outside it.
  void set(int x, int y, bool value = true);

  std::size_t count() const;
  bool any() const { return count() > 0; }
  /// Tight bounding box of set pixels (empty box for an empty mask).
  PixelBox bounds() const;
  /// Mean pixel-center coordinate of set pixels.
  Vec2 centroid() const;
  /// Shrinks the stored region to the tight bounds.
  void shrink_to_fit();
  std::vector<std::uint8_t> dense() const;

  friend bool operator==(const BinaryMask& a, const BinaryMask& b);

 private:
  int width_ = 0;
  int height_ = 0;
  PixelBox roi_;
  std::vector<std::uint8_t> bits_;
};

/// COCO uncompressed RLE: column-major run lengths, starting with a run of
/// zeros (possibly empty). `size` is {height, width}.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;
  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle rle_encode(const BinaryMask& mask);
/// Throws kMalformedRle when the runs do not sum to height * width.
BinaryMask rle_decode(const Rle& rle);

/// Separable square (Chebyshev) erosion for radius < 0, dilation for
/// radius > 0. The result region grows by |radius| for dilation.
BinaryMask morph(const BinaryMask& mask, int radius);

}  // namespace sg3d
