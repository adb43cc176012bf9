// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/geometry/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <limits>

#include "sg3d/error.hpp"

namespace sg3d {

void Pose::validate() const {
  const double n = rotation.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9 || !position.allFinite()) {
    throw Error(ErrorCode::kInvalidPose,
                "rotation quaternion norm " + std::to_string(n) + " is not unit");
  }
}

Quat checked_unit_quaternion(const Quat& q, double tolerance) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > tolerance) {
    throw Error(ErrorCode::kInvalidPose,
                "quaternion norm " + std::to_string(n) + " outside tolerance");
  }
  // Leave near-unit input alone so poses survive a JSON round trip bit for bit.
  return std::abs(n - 1.0) <= 8 * std::numeric_limits<double>::epsilon() ? q : q.normalized();
}

}  // namespace sg3d

namespace sg3d::geometry {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Mat3 rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

}  // namespace

void validate_pano_size(int width, int height) {
  if (height <= 0 || width != 2 * height) {
    throw Error(ErrorCode::kInvalidPanorama,
                "panorama must be 2:1, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

Vec3 pano_pixel_to_dir(double u, double v, int width, int height) {
  validate_pano_size(width, height);
  const double lon = ((u + 0.5) / width * 360.0 - 180.0) * kDeg;
  const double lat = (90.0 - (v + 0.5) / height * 180.0) * kDeg;
  const double c = std::cos(lat);
  return {std::sin(lon) * c, std::cos(lon) * c, std::sin(lat)};
}

std::vector<Vec3> pano_directions(int width, int height) {
  validate_pano_size(width, height);
  std::vector<Vec3> dirs(static_cast<std::size_t>(width) * height);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) dirs[static_cast<std::size_t>(v) * width + u] = pano_pixel_to_dir(u, v, width, height);
  return dirs;
}

Vec2 dir_to_pano_pixel(const Vec3& dir, int width, int height) {
  const double n = dir.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kDegenerateDirection, "zero-length direction");
  }
  const double lon = std::atan2(dir.x(), dir.y());
  const double lat = std::asin(std::clamp(dir.z() / n, -1.0, 1.0));
  double u = (lon / (2.0 * std::numbers::pi) + 0.5) * width;
  if (u >= width) u -= width;
  if (u < 0.0) u += width;
  double v = (0.5 - lat / std::numbers::pi) * height;
  v = std::clamp(v, 0.0, static_cast<double>(height));
  return {u, v};
}

void RectCamera::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    throw Error(ErrorCode::kConfig, "fov must be in (0, 180), got " + std::to_string(fov_deg));
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kConfig, "view dimensions must be positive");
  }
}

double RectCamera::focal_px() const {
  return 0.5 * width / std::tan(0.5 * fov_deg * kDeg);
}

Mat3 RectCamera::view_to_pano() const {
  return rot_z(-yaw_deg * kDeg) * rot_x(pitch_deg * kDeg);
}

Vec3 RectCamera::pixel_dir_view(double u, double v) const {
  const double f = focal_px();
  return Vec3((u + 0.5 - 0.5 * width) / f, 1.0, -(v + 0.5 - 0.5 * height) / f).normalized();
}

std::optional<Vec2> RectCamera::project_pano_dir(const Vec3& pano_dir) const {
  const Vec3 d = view_to_pano().transpose() * pano_dir;
  if (d.y() <= 0.0) return std::nullopt;
  const double f = focal_px();
  return Vec2(f * d.x() / d.y() + 0.5 * width, -f * d.z() / d.y() + 0.5 * height);
}

ViewProjector::ViewProjector(const RectCamera& cam)
    : pano_to_view_(cam.view_to_pano().transpose()),
      focal_(cam.focal_px()),
      half_w_(0.5 * cam.width),
      half_h_(0.5 * cam.height),
      width_(cam.width),
      height_(cam.height) {}

Vec2 rect_pixel_to_pano_pixel(const RectCamera& cam, double u, double v,
                              int pano_width, int pano_height) {
  return dir_to_pano_pixel(cam.pixel_dir_pano(u, v), pano_width, pano_height);
}

RgbImage render_rect_view(const RgbImage& pano, const RectCamera& cam, Sampling sampling) {
  validate_pano_size(pano.width(), pano.height());
  cam.validate();
  const int pw = pano.width(), ph = pano.height(), ch = pano.channels();
  RgbImage out(cam.width, cam.height, ch);
  const Mat3 rot = cam.view_to_pano();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec2 p = dir_to_pano_pixel(rot * cam.pixel_dir_view(x, y), pw, ph);
      if (sampling == Sampling::kNearest) {
        const int u = std::min(static_cast<int>(p.x()), pw - 1);
        const int v = std::min(static_cast<int>(p.y()), ph - 1);
        for (int c = 0; c < ch; ++c) out.at(x, y, c) = pano.at(u, v, c);
        continue;
      }
      // Bilinear between pixel centers; wrap in u, clamp in v.
      const double fx = p.x() - 0.5, fy = p.y() - 0.5;
      const double x0f = std::floor(fx), y0f = std::floor(fy);
      const double ax = fx - x0f, ay = fy - y0f;
      int x0 = static_cast<int>(x0f) % pw;
      if (x0 < 0) x0 += pw;
      const int x1 = (x0 + 1) % pw;
      const int y0 = std::clamp(static_cast<int>(y0f), 0, ph - 1);
      const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, ph - 1);
      for (int c = 0; c < ch; ++c) {
        const double top = (1 - ax) * pano.at(x0, y0, c) + ax * pano.at(x1, y0, c);
        const double bot = (1 - ax) * pano.at(x0, y1, c) + ax * pano.at(x1, y1, c);
        const double val = (1 - ay) * top + ay * bot;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace sg3d::geometry
