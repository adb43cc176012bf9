// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/mask.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sg3d/error.hpp"

namespace sg3d {

namespace {

PixelBox clip(PixelBox b, int w, int h) {
  b.x0 = std::clamp(b.x0, 0, w);
  b.x1 = std::clamp(b.x1, 0, w);
  b.y0 = std::clamp(b.y0, 0, h);
  b.y1 = std::clamp(b.y1, 0, h);
  if (b.empty()) b = {};
  return b;
}

}  // namespace

BinaryMask::BinaryMask(int width, int height) : BinaryMask(width, height, {0, 0, width, height}) {}

BinaryMask::BinaryMask(int width, int height, PixelBox roi)
    : width_(width), height_(height), roi_(clip(roi, width, height)) {
  bits_.assign(static_cast<std::size_t>(roi_.width()) * roi_.height(), 0);
}

BinaryMask BinaryMask::from_dense(int width, int height, const std::vector<std::uint8_t>& dense) {
  if (dense.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch, "dense mask size does not match frame");
  }
  BinaryMask m(width, height);
  for (std::size_t i = 0; i < dense.size(); ++i) m.bits_[i] = dense[i] ? 1 : 0;
  m.shrink_to_fit();
  return m;
}

void BinaryMask::set(int x, int y, bool value) {
  if (!roi_.contains(x, y)) {
    throw Error(ErrorCode::kOutOfRange,
                "mask write outside region at " + std::to_string(x) + "," + std::to_string(y));
  }
  bits_[static_cast<std::size_t>(y - roi_.y0) * roi_.width() + (x - roi_.x0)] = value ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelBox BinaryMask::bounds() const {
  PixelBox b{roi_.x1, roi_.y1, roi_.x0, roi_.y0};
  bool any = false;
  for (int y = roi_.y0; y < roi_.y1; ++y) {
    const std::uint8_t* row = bits_.data() + static_cast<std::size_t>(y - roi_.y0) * roi_.width();
    for (int x = roi_.x0; x < roi_.x1; ++x) {
      if (!row[x - roi_.x0]) continue;
      any = true;
      b.x0 = std::min(b.x0, x);
      b.x1 = std::max(b.x1, x + 1);
      b.y0 = std::min(b.y0, y);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  return any ? b : PixelBox{};
}

Vec2 BinaryMask::centroid() const {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = roi_.y0; y < roi_.y1; ++y)
    for (int x = roi_.x0; x < roi_.x1; ++x)
      if (at(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  if (n == 0) return Vec2(0.5 * width_, 0.5 * height_);
  return Vec2(sx / n, sy / n);
}

void BinaryMask::shrink_to_fit() {
  const PixelBox b = bounds();
  if (b == roi_) return;
  BinaryMask tight(width_, height_, b);
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x)
      if (at(x, y)) tight.set(x, y);
  *this = std::move(tight);
}

std::vector<std::uint8_t> BinaryMask::dense() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width_) * height_, 0);
  for (int y = roi_.y0; y < roi_.y1; ++y)
    for (int x = roi_.x0; x < roi_.x1; ++x)
      out[static_cast<std::size_t>(y) * width_ + x] = at(x, y) ? 1 : 0;
  return out;
}

bool operator==(const BinaryMask& a, const BinaryMask& b) {
  if (a.width_ != b.width_ || a.height_ != b.height_) return false;
  PixelBox u{std::min(a.roi_.x0, b.roi_.x0), std::min(a.roi_.y0, b.roi_.y0),
             std::max(a.roi_.x1, b.roi_.x1), std::max(a.roi_.y1, b.roi_.y1)};
  for (int y = u.y0; y < u.y1; ++y)
    for (int x = u.x0; x < u.x1; ++x)
      if (a.at(x, y) != b.at(x, y)) return false;
  return true;
}

Rle rle_encode(const BinaryMask& mask) {
  Rle rle{mask.height(), mask.width(), {}};
  bool current = false;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      const bool v = mask.at(x, y);
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const Rle& rle) {
  if (rle.height < 0 || rle.width < 0) throw Error(ErrorCode::kMalformedRle, "negative size");
  const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * rle.width;
  const std::uint64_t sum = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (sum != total) {
    throw Error(ErrorCode::kMalformedRle,
                "run lengths sum to " + std::to_string(sum) + ", expected " + std::to_string(total));
  }
  std::vector<std::uint8_t> dense(total, 0);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto run : rle.counts) {
    if (value) {
      for (std::uint64_t i = pos; i < pos + run; ++i) {
        const std::uint64_t x = i / rle.height, y = i % rle.height;
        dense[y * rle.width + x] = 1;
      }
    }
    pos += run;
    value = !value;
  }
  return BinaryMask::from_dense(rle.width, rle.height, dense);
}

BinaryMask morph(const BinaryMask& mask, int radius) {
  if (radius == 0) return mask;
  const PixelBox src = mask.bounds();
  if (src.empty()) return BinaryMask(mask.width(), mask.height(), PixelBox{});
  const int r = std::abs(radius);
  const bool dilate = radius > 0;
  // Work buffer padded by r on each side so erosion sees zeros past the edge
  // of the set region (frame borders count as background too).
  PixelBox work{src.x0 - r, src.y0 - r, src.x1 + r, src.y1 + r};
  const int ww = work.width(), wh = work.height();
  std::vector<std::uint8_t> in(static_cast<std::size_t>(ww) * wh, 0), tmp(in.size(), 0);
  for (int y = src.y0; y < src.y1; ++y)
    for (int x = src.x0; x < src.x1; ++x)
      in[static_cast<std::size_t>(y - work.y0) * ww + (x - work.x0)] = mask.at(x, y);

  // Sliding-window count along rows, then columns.
  auto pass = [&](const std::vector<std::uint8_t>& a, std::vector<std::uint8_t>& b, bool rows) {
    const int outer = rows ? wh : ww, inner = rows ? ww : wh;
    auto idx = [&](int o, int i) {
      return rows ? static_cast<std::size_t>(o) * ww + i : static_cast<std::size_t>(i) * ww + o;
    };
    for (int o = 0; o < outer; ++o) {
      int count = 0;
      for (int i = 0; i < std::min(r, inner); ++i) count += a[idx(o, i)];
      for (int i = 0; i < inner; ++i) {
        if (i + r < inner) count += a[idx(o, i + r)];
        if (i - r - 1 >= 0) count -= a[idx(o, i - r - 1)];
        const int lo = std::max(0, i - r), hi = std::min(inner - 1, i + r);
        const int window = hi - lo + 1;
        // Outside the work buffer is background, so a clipped window can never
        // be fully set for erosion.
        const bool full = window == 2 * r + 1 && count == window;
        b[idx(o, i)] = dilate ? (count > 0) : full;
      }
    }
  };
  pass(in, tmp, true);
  pass(tmp, in, false);

  BinaryMask out(mask.width(), mask.height(), work);
  for (int y = std::max(work.y0, 0); y < std::min(work.y1, mask.height()); ++y)
    for (int x = std::max(work.x0, 0); x < std::min(work.x1, mask.width()); ++x)
      if (in[static_cast<std::size_t>(y - work.y0) * ww + (x - work.x0)]) out.set(x, y);
  out.shrink_to_fit();
  return out;
}

}  // namespace sg3d
