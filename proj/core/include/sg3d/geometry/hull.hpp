// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

#include "sg3d/types.hpp"

namespace sg3d::geometry {

struct HullVolume {
  double volume = 0.0;
  /// Set when the input spans fewer than three dimensions (fewer than four
  /// points, or all points collinear/coplanar within tolerance).
  bool degenerate = false;
};

struct ConvexHull3 {
  std::vector<Vec3> points;                  // input points (copied)
  std::vector<std::array<int, 3>> triangles;  // outward-facing, indices into points
  bool degenerate = false;
};

/// Incremental 3D convex hull. Coplanar facets come out triangulated.
ConvexHull3 convex_hull(std::span<const Vec3> points);

/// Volume enclosed by the convex hull of `points` (cubic meters).
HullVolume convex_hull_volume(std::span<const Vec3> points);

/// 2D convex hull (counter-clockwise, no collinear points) and its area.
std::vector<Vec2> convex_hull_2d(std::span<const Vec2> points);
double polygon_area(std::span<const Vec2> polygon);

/// Area of the convex footprint of the points projected along +z.
double footprint_area(std::span<const Vec3> points);

}  // namespace sg3d::geometry
