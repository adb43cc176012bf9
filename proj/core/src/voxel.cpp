// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/geometry/voxel.hpp"

#include <bit>
#include <cmath>

#include "sg3d/error.hpp"

namespace sg3d::geometry {

VoxelGrid::VoxelGrid(const Vec3& origin, double cell_size, std::array<int, 3> dims)
    : origin_(origin), cell_size_(cell_size), dims_(dims) {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::kConfig, "voxel cell_size must be > 0");
  for (int d : dims)
    if (d < 1) throw Error(ErrorCode::kConfig, "voxel dims must be >= 1");
  bits_.assign((size() + 63) / 64, 0);
}

std::size_t VoxelGrid::count() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

Aabb VoxelGrid::voxel_box(int i, int j, int k) const {
  Aabb b;
  b.min = origin_ + cell_size_ * Vec3(i, j, k);
  b.max = origin_ + cell_size_ * Vec3(i + 1, j + 1, k + 1);
  return b;
}

bool triangle_box_overlap(const Aabb& box, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 center = box.center();
  const Vec3 h = 0.5 * box.extent();
  const Vec3 v0 = a - center, v1 = b - center, v2 = c - center;
  const std::array<Vec3, 3> e = {v1 - v0, v2 - v1, v0 - v2};

  // Projections of the triangle and box onto an axis; separated if disjoint.
  auto separated = [&](const Vec3& axis) {
    const double p0 = axis.dot(v0), p1 = axis.dot(v1), p2 = axis.dot(v2);
    const double r = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y()) +
                     h.z() * std::abs(axis.z());
    const double lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
    return lo > r || hi < -r;
  };

  for (int i = 0; i < 3; ++i) {
    Vec3 axis = Vec3::Zero();
    axis[i] = 1.0;
    if (separated(axis)) return false;
  }
  const Vec3 n = e[0].cross(e[1]);
  if (n.squaredNorm() > 0.0 && separated(n)) return false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Vec3 unit = Vec3::Zero();
      unit[i] = 1.0;
      const Vec3 axis = unit.cross(e[j]);
      if (axis.squaredNorm() > 0.0 && separated(axis)) return false;
    }
  }
  return true;
}

VoxelGrid voxelize(const TriMesh& mesh, std::span<const int> faces, double cell_size) {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::kConfig, "voxel cell_size must be > 0");
  if (faces.empty()) return VoxelGrid(Vec3::Zero(), cell_size, {1, 1, 1});
  const Aabb bounds = mesh.bounds(faces);
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a) {
    dims[a] = std::max(1, static_cast<int>(std::ceil(bounds.extent()[a] / cell_size - 1e-9)));
  }
  VoxelGrid grid(bounds.min, cell_size, dims);
  for (int f : faces) {
    const Vec3 &a = mesh.corner(f, 0), &b = mesh.corner(f, 1), &c = mesh.corner(f, 2);
    Aabb tb;
    tb.extend(a);
    tb.extend(b);
    tb.extend(c);
    std::array<int, 3> lo, hi;
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = std::clamp(static_cast<int>(std::floor((tb.min[ax] - bounds.min[ax]) / cell_size)) - 1, 0, dims[ax] - 1);
      hi[ax] = std::clamp(static_cast<int>(std::floor((tb.max[ax] - bounds.min[ax]) / cell_size)) + 1, 0, dims[ax] - 1);
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i)
          if (!grid.occupied(i, j, k) && triangle_box_overlap(grid.voxel_box(i, j, k), a, b, c))
            grid.set(i, j, k);
  }
  return grid;
}

}  // namespace sg3d::geometry
