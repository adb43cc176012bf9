// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/geometry/bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "sg3d/error.hpp"

namespace sg3d::geometry {

namespace {

constexpr double kEdgeTol = 1e-12;
constexpr int kLeafSize = 4;
constexpr int kBins = 16;

std::optional<RayHit> moller_trumbore(const Vec3& v0, const Vec3& e1, const Vec3& e2,
                                      const Vec3& o, const Vec3& d) {
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - v0;
  const double u = s.dot(p) * inv;
  if (u < -kEdgeTol || u > 1.0 + kEdgeTol) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < -kEdgeTol || u + v > 1.0 + kEdgeTol) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (!(t > kRayTMin)) return std::nullopt;
  Vec3 bary(std::max(0.0, 1.0 - u - v), std::max(0.0, u), std::max(0.0, v));
  bary /= bary.sum();
  return RayHit{-1, t, bary};
}

double surface_area(const Aabb& b) {
  if (b.empty()) return 0.0;
  const Vec3 e = b.extent();
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

bool slab(const Aabb& box, const Vec3& o, const Vec3& inv, double t_max, double& t_near) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double ta = (box.min[a] - o[a]) * inv[a];
    double tb = (box.max[a] - o[a]) * inv[a];
    if (ta > tb) std::swap(ta, tb);
    // NaN (origin on a slab plane, axis-parallel ray) is ignored by max/min.
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  t_near = t0;
  return true;
}

}  // namespace

Vec3 checked_ray_direction(const Vec3& dir) {
  const double n = dir.norm();
  if (!(n >= 0.9 && n <= 1.1)) {
    throw Error(ErrorCode::kNonUnitDirection,
                "ray direction norm " + std::to_string(n) + " outside [0.9, 1.1]");
  }
  return dir / n;
}

std::optional<RayHit> intersect_triangle(const TriMesh& mesh, int face, const Vec3& origin,
                                         const Vec3& dir) {
  const Vec3& v0 = mesh.corner(face, 0);
  auto hit = moller_trumbore(v0, mesh.corner(face, 1) - v0, mesh.corner(face, 2) - v0,
                             origin, dir);
  if (hit) hit->face_id = face;
  return hit;
}

Bvh Bvh::build(const TriMesh& mesh) {
  std::vector<int> all(mesh.faces.size());
  std::iota(all.begin(), all.end(), 0);
  return build(mesh, all);
}

Bvh Bvh::build(const TriMesh& mesh, std::span<const int> face_subset) {
  if (face_subset.empty()) throw Error(ErrorCode::kEmptyGeometry, "cannot build BVH without faces");
  Bvh bvh;
  const int n = static_cast<int>(face_subset.size());
  std::vector<Vec3> centroids(n);
  std::vector<Aabb> boxes(n);
  std::vector<int> prims(n);
  for (int i = 0; i < n; ++i) {
    const int f = face_subset[i];
    if (f < 0 || f >= static_cast<int>(mesh.faces.size())) {
      throw Error(ErrorCode::kOutOfRange, "face id " + std::to_string(f) + " out of range");
    }
    prims[i] = i;
    for (int k = 0; k < 3; ++k) boxes[i].extend(mesh.corner(f, k));
    // Pad so rounding in the slab test never rejects a grazing hit.
    const Vec3 pad = (boxes[i].max.cwiseAbs().cwiseMax(boxes[i].min.cwiseAbs()).array() + 1.0) * 1e-9;
    boxes[i].min -= pad;
    boxes[i].max += pad;
    centroids[i] = boxes[i].center();
  }
  bvh.nodes_.reserve(2 * n);
  bvh.build_node(prims, centroids, boxes, 0, n);
  bvh.tris_.reserve(n);
  bvh.face_ids_.reserve(n);
  for (int p : prims) {
    const int f = face_subset[p];
    const Vec3& v0 = mesh.corner(f, 0);
    bvh.tris_.push_back({v0, mesh.corner(f, 1) - v0, mesh.corner(f, 2) - v0});
    bvh.face_ids_.push_back(f);
  }
  return bvh;
}

int Bvh::build_node(std::vector<int>& prims, std::vector<Vec3>& centroids,
                    std::vector<Aabb>& boxes, int begin, int end) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Aabb box, cbox;
  for (int i = begin; i < end; ++i) {
    box.extend(boxes[prims[i]]);
    cbox.extend(centroids[prims[i]]);
  }
  nodes_[index].box = box;
  const int count = end - begin;
  if (count <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = count;
    return index;
  }

  // Binned SAH over the widest centroid axis; median split as a fallback.
  const Vec3 ext = cbox.extent();
  int axis = 0;
  if (ext.y() > ext[axis]) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  int mid = begin + count / 2;
  if (ext[axis] > 0.0) {
    std::array<Aabb, kBins> bin_box;
    std::array<int, kBins> bin_count{};
    auto bin_of = [&](int p) {
      const int b = static_cast<int>(kBins * (centroids[p][axis] - cbox.min[axis]) / ext[axis]);
      return std::clamp(b, 0, kBins - 1);
    };
    for (int i = begin; i < end; ++i) {
      const int b = bin_of(prims[i]);
      bin_box[b].extend(boxes[prims[i]]);
      ++bin_count[b];
    }
    double best_cost = std::numeric_limits<double>::infinity();
    int best_split = -1;
    for (int s = 1; s < kBins; ++s) {
      Aabb l, r;
      int nl = 0, nr = 0;
      for (int b = 0; b < s; ++b) { l.extend(bin_box[b]); nl += bin_count[b]; }
      for (int b = s; b < kBins; ++b) { r.extend(bin_box[b]); nr += bin_count[b]; }
      if (nl == 0 || nr == 0) continue;
      const double cost = nl * surface_area(l) + nr * surface_area(r);
      if (cost < best_cost) { best_cost = cost; best_split = s; }
    }
    if (best_split > 0) {
      auto it = std::stable_partition(prims.begin() + begin, prims.begin() + end,
                                      [&](int p) { return bin_of(p) < best_split; });
      mid = static_cast<int>(it - prims.begin());
    }
  }
  if (mid == begin || mid == end) {
    mid = begin + count / 2;
    std::nth_element(prims.begin() + begin, prims.begin() + mid, prims.begin() + end,
                     [&](int a, int b) {
                       if (centroids[a][axis] != centroids[b][axis])
                         return centroids[a][axis] < centroids[b][axis];
                       return a < b;
                     });
  }
  build_node(prims, centroids, boxes, begin, mid);
  const int right = build_node(prims, centroids, boxes, mid, end);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

std::optional<RayHit> Bvh::hit_prim(int prim, const Vec3& origin, const Vec3& dir) const {
  const Tri& t = tris_[prim];
  auto hit = moller_trumbore(t.v0, t.e1, t.e2, origin, dir);
  if (hit) hit->face_id = face_ids_[prim];
  return hit;
}

// visit(prim, t_limit&) is called for every primitive in a node the ray
// reaches before t_limit; it may shrink t_limit or return false to stop.
template <typename Visit>
void Bvh::traverse(const Vec3& origin, const Vec3& dir, Visit&& visit) const {
  if (nodes_.empty()) return;
  const Vec3 inv = dir.cwiseInverse();
  double t_limit = std::numeric_limits<double>::infinity();
  std::array<int, 128> stack;
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double t_near;
    if (!slab(node.box, origin, inv, t_limit + kRayTieEps, t_near)) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        if (!visit(i, t_limit)) return;
      }
      continue;
    }
    const int left = static_cast<int>(&node - nodes_.data()) + 1;
    const int right = node.first;
    double tl = 0.0, tr = 0.0;
    const bool hl = slab(nodes_[left].box, origin, inv, t_limit + kRayTieEps, tl);
    const bool hr = slab(nodes_[right].box, origin, inv, t_limit + kRayTieEps, tr);
    if (hl && hr) {
      if (tl <= tr) { stack[top++] = right; stack[top++] = left; }
      else { stack[top++] = left; stack[top++] = right; }
    } else if (hl) {
      stack[top++] = left;
    } else if (hr) {
      stack[top++] = right;
    }
  }
}

std::optional<RayHit> Bvh::raycast(const Vec3& origin, const Vec3& dir_in) const {
  const Vec3 dir = checked_ray_direction(dir_in);
  std::optional<RayHit> best;
  traverse(origin, dir, [&](int prim, double& t_limit) {
    auto hit = hit_prim(prim, origin, dir);
    if (hit && (!best || closer_hit(hit->t, hit->face_id, best->t, best->face_id))) {
      best = hit;
      t_limit = best->t;
    }
    return true;
  });
  return best;
}

bool Bvh::occluded(const Vec3& origin, const Vec3& dir_in) const {
  const Vec3 dir = checked_ray_direction(dir_in);
  bool any = false;
  traverse(origin, dir, [&](int prim, double&) {
    any = hit_prim(prim, origin, dir).has_value();
    return !any;
  });
  return any;
}

std::vector<RayHit> Bvh::all_hits(const Vec3& origin, const Vec3& dir_in) const {
  const Vec3 dir = checked_ray_direction(dir_in);
  std::vector<RayHit> hits;
  traverse(origin, dir, [&](int prim, double&) {
    if (auto hit = hit_prim(prim, origin, dir)) hits.push_back(*hit);
    return true;
  });
  std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
    return a.t != b.t ? a.t < b.t : a.face_id < b.face_id;
  });
  return hits;
}

}  // namespace sg3d::geometry
