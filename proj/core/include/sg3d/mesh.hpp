// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

#include "sg3d/types.hpp"

namespace sg3d {

/// Indexed triangle mesh in meters. `face_areas` is a cache kept in sync by
/// `recompute_areas()`; loaders call it after any topology change.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<double> face_areas;

  std::size_t num_faces() const { return faces.size(); }

  const Vec3& corner(int face, int k) const { return vertices[faces[face][k]]; }
  Vec3 face_center(int face) const {
    return (corner(face, 0) + corner(face, 1) + corner(face, 2)) / 3.0;
  }
  /// Unnormalized normal; its norm is twice the face area.
  Vec3 face_cross(int face) const {
    return (corner(face, 1) - corner(face, 0)).cross(corner(face, 2) - corner(face, 0));
  }
  Vec3 face_normal(int face) const { return face_cross(face).normalized(); }

  void recompute_areas();
  /// Removes faces with area below `min_area` (and any with out-of-range
  /// indices never get here: loaders reject those). Returns the drop count.
  int drop_degenerate_faces(double min_area = 1e-12);
  Aabb bounds() const;
  Aabb bounds(std::span<const int> face_subset) const;
  /// Distinct vertex positions referenced by the given faces.
  std::vector<Vec3> face_vertices(std::span<const int> face_subset) const;
};

/// Edge adjacency by shared vertex indices (not positions): two faces are
/// neighbors iff they share both endpoints of an edge.
class MeshAdjacency {
 public:
  explicit MeshAdjacency(const TriMesh& mesh);
  std::span<const int> neighbors(int face) const {
    return {neighbors_.data() + offsets_[face],
            neighbors_.data() + offsets_[face + 1]};
  }

 private:
  std::vector<int> offsets_;
  std::vector<int> neighbors_;
};

}  // namespace sg3d
