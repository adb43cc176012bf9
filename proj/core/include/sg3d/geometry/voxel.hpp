// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sg3d/mesh.hpp"

namespace sg3d::geometry {

/// Dense occupancy grid. Voxel (i, j, k) covers
/// origin + cell_size * [i, i+1) x [j, j+1) x [k, k+1).
class VoxelGrid {
 public:
  VoxelGrid() : VoxelGrid(Vec3::Zero(), 1.0, {1, 1, 1}) {}
  VoxelGrid(const Vec3& origin, double cell_size, std::array<int, 3> dims);

  const Vec3& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const { return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]; }

  std::size_t linear(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i;
  }
  bool occupied(int i, int j, int k) const { return test(linear(i, j, k)); }
  void set(int i, int j, int k) { set(linear(i, j, k)); }

  bool test(std::size_t idx) const { return (bits_[idx >> 6] >> (idx & 63)) & 1u; }
  void set(std::size_t idx) { bits_[idx >> 6] |= std::uint64_t{1} << (idx & 63); }
  std::size_t count() const;

  Aabb voxel_box(int i, int j, int k) const;

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  Vec3 origin_;
  double cell_size_;
  std::array<int, 3> dims_;
  std::vector<std::uint64_t> bits_;
};

/// Separating-axis triangle/box overlap; touching counts as overlap.
bool triangle_box_overlap(const Aabb& box, const Vec3& a, const Vec3& b, const Vec3& c);

/// Conservative voxelization of a face subset on a grid anchored at the
/// subset's bounding-box minimum. Throws kConfig for cell_size <= 0.
VoxelGrid voxelize(const TriMesh& mesh, std::span<const int> faces, double cell_size);

}  // namespace sg3d::geometry
