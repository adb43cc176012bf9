// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sg3d/mesh.hpp"

namespace sg3d::geometry {

struct RayHit {
  int face_id = -1;
  double t = 0.0;
  Vec3 barycentric = Vec3::Zero();  // weights of the face's corners 0, 1, 2
};

/// Hits closer than this along the ray are ignored (self-intersection guard).
inline constexpr double kRayTMin = 1e-9;
/// Two hits whose t differ by at most this much are a tie; the lower face id
/// wins. Covers rays through an edge shared by two coplanar triangles.
inline constexpr double kRayTieEps = 1e-10;

/// Single ray-triangle test (Moller-Trumbore with an inclusive edge
/// tolerance). Exposed so exhaustive scans use the identical primitive.
std::optional<RayHit> intersect_triangle(const TriMesh& mesh, int face,
                                         const Vec3& origin, const Vec3& dir);

/// True when `a` should replace `b` as the nearest hit.
inline bool closer_hit(double ta, int fa, double tb, int fb) {
  if (ta < tb - kRayTieEps) return true;
  if (ta > tb + kRayTieEps) return false;
  return fa < fb;
}

/// Bounding volume hierarchy over a triangle mesh (or a subset of its faces).
/// Immutable after construction; safe to query from many threads.
class Bvh {
 public:
  Bvh() = default;

  /// Throws kEmptyGeometry for a mesh (or subset) without faces.
  static Bvh build(const TriMesh& mesh);
  static Bvh build(const TriMesh& mesh, std::span<const int> face_subset);

  /// Nearest hit with t > kRayTMin. `dir` is normalized internally when its
  /// norm lies in [0.9, 1.1]; anything else throws kNonUnitDirection.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir) const;
  /// Any hit with t > kRayTMin. Same direction contract as raycast.
  bool occluded(const Vec3& origin, const Vec3& dir) const;
  /// Every hit along the ray, sorted by (t, face id).
  std::vector<RayHit> all_hits(const Vec3& origin, const Vec3& dir) const;

  std::size_t num_faces() const { return face_ids_.size(); }
  bool empty() const { return nodes_.empty(); }

 private:
  struct Node {
    Aabb box;
    int first = 0;  // leaf: first primitive; inner: right child index
    int count = 0;  // leaf primitive count; 0 for inner nodes
  };
  struct Tri {
    Vec3 v0, e1, e2;
  };

  int build_node(std::vector<int>& prims, std::vector<Vec3>& centroids,
                 std::vector<Aabb>& boxes, int begin, int end);
  std::optional<RayHit> hit_prim(int prim, const Vec3& origin, const Vec3& dir) const;

  template <typename Visit>
  void traverse(const Vec3& origin, const Vec3& dir, Visit&& visit) const;

  std::vector<Node> nodes_;
  std::vector<Tri> tris_;
  std::vector<int> face_ids_;
};

/// Normalizes `dir` under the raycast contract.
Vec3 checked_ray_direction(const Vec3& dir);

}  // namespace sg3d::geometry
