// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "sg3d/image.hpp"
#include "sg3d/types.hpp"

namespace sg3d::geometry {

// Equirectangular convention: column u spans longitude [-180, 180) left to
// right, row v spans latitude [90, -90] top to bottom, samples at pixel
// centers. Longitude 0 / latitude 0 is the camera-frame forward axis (+y),
// positive longitude turns right (+x), positive latitude looks up (+z).

/// Throws kInvalidPanorama unless width == 2 * height > 0.
void validate_pano_size(int width, int height);

/// Unit direction through the center of pixel (u, v). u, v are pixel
/// indices (fractional values are accepted and offset by the same +0.5).
Vec3 pano_pixel_to_dir(double u, double v, int width, int height);

/// Row-major table of pano_pixel_to_dir for every pixel center.
std::vector<Vec3> pano_directions(int width, int height);

/// Continuous pixel coordinates of a direction: pixel (i, j) covers
/// [i, i+1) x [j, j+1), so floor() of the result is the containing pixel.
/// u wraps into [0, width); v is clamped to [0, height].
Vec2 dir_to_pano_pixel(const Vec3& dir, int width, int height);

/// Same as dir_to_pano_pixel but returns the containing pixel index.
inline std::pair<int, int> dir_to_pano_index(const Vec3& dir, int width, int height) {
  const Vec2 p = dir_to_pano_pixel(dir, width, height);
  int u = static_cast<int>(p.x());
  int v = static_cast<int>(p.y());
  if (u >= width) u = width - 1;
  if (v >= height) v = height - 1;
  return {u, v};
}

/// Pinhole view sampled from a panorama. Square pixels; `fov_deg` is both
/// horizontal and vertical for square frames (horizontal otherwise).
struct RectCamera {
  Pose pose;
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double fov_deg = 90.0;
  int width = 800;
  int height = 800;

  void validate() const;

  double focal_px() const;
  /// Rotation taking view-frame vectors into the panorama camera frame.
  Mat3 view_to_pano() const;
  /// Unit direction through the center of view pixel (u, v), view frame.
  Vec3 pixel_dir_view(double u, double v) const;
  Vec3 pixel_dir_pano(double u, double v) const { return view_to_pano() * pixel_dir_view(u, v); }
  Vec3 pixel_dir_world(double u, double v) const { return pose.rotation * pixel_dir_pano(u, v); }
  /// Continuous view coordinates of a panorama-frame direction, nullopt when
  /// the direction points behind the image plane.
  std::optional<Vec2> project_pano_dir(const Vec3& pano_dir) const;
};

/// Precomputed projector for hot loops: maps panorama-frame directions into
/// the view without re-deriving the rotation per call.
class ViewProjector {
 public:
  explicit ViewProjector(const RectCamera& cam);

  /// Pixel index containing the direction, or false when outside the frame.
  bool pixel_of(const Vec3& pano_dir, int& u, int& v) const {
    const Vec3 d = pano_to_view_ * pano_dir;
    if (d.y() <= 0.0) return false;
    const double x = focal_ * d.x() / d.y() + half_w_;
    const double y = -focal_ * d.z() / d.y() + half_h_;
    if (!(x >= 0.0 && y >= 0.0 && x < width_ && y < height_)) return false;
    u = static_cast<int>(x);
    v = static_cast<int>(y);
    return true;
  }

 private:
  Mat3 pano_to_view_;
  double focal_;
  double half_w_;
  double half_h_;
  double width_;
  double height_;
};

/// Continuous panorama coordinates of the ray through view pixel (u, v).
Vec2 rect_pixel_to_pano_pixel(const RectCamera& cam, double u, double v,
                              int pano_width, int pano_height);

enum class Sampling { kBilinear, kNearest };

/// Samples an equirectangular RGB image along the pinhole ray of every view
/// pixel. Deterministic; bilinear weights wrap across the yaw seam.
RgbImage render_rect_view(const RgbImage& pano, const RectCamera& cam,
                          Sampling sampling = Sampling::kBilinear);

}  // namespace sg3d::geometry
