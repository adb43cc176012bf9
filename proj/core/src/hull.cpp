// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/geometry/hull.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sg3d::geometry {

namespace {

struct Face {
  std::array<int, 3> v;
  Vec3 normal;  // unit, outward
  double offset;
  bool alive = true;

  double distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

Face make_face(const std::vector<Vec3>& pts, int a, int b, int c) {
  Face f;
  f.v = {a, b, c};
  f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

}  // namespace

ConvexHull3 convex_hull(std::span<const Vec3> input) {
  ConvexHull3 hull;
  hull.points.assign(input.begin(), input.end());
  const auto& pts = hull.points;
  const int n = static_cast<int>(pts.size());
  if (n < 4) {
    hull.degenerate = true;
    return hull;
  }

  Aabb box;
  for (const auto& p : pts) box.extend(p);
  const double scale = std::max(box.extent().maxCoeff(), 1e-300);
  const double eps = 1e-10 * std::max(scale, box.min.cwiseAbs().maxCoeff() + box.max.cwiseAbs().maxCoeff());

  // Initial tetrahedron: extreme pair, farthest from their line, farthest from
  // their plane. Failure at any step means the input is degenerate.
  int i0 = 0, i1 = 0;
  for (int a = 0; a < 3; ++a) {
    int lo = 0, hi = 0;
    for (int i = 1; i < n; ++i) {
      if (pts[i][a] < pts[lo][a]) lo = i;
      if (pts[i][a] > pts[hi][a]) hi = i;
    }
    if ((pts[hi] - pts[lo]).norm() > (pts[i1] - pts[i0]).norm()) {
      i0 = lo;
      i1 = hi;
    }
  }
  if ((pts[i1] - pts[i0]).norm() <= eps) {
    hull.degenerate = true;
    return hull;
  }
  const Vec3 axis = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  double best = eps;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = pts[i] - pts[i0];
    const double dist = (d - axis * axis.dot(d)).norm();
    if (dist > best) { best = dist; i2 = i; }
  }
  if (i2 < 0) {
    hull.degenerate = true;
    return hull;
  }
  const Vec3 pn = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const double dist = std::abs(pn.dot(pts[i] - pts[i0]));
    if (dist > best) { best = dist; i3 = i; }
  }
  if (i3 < 0) {
    hull.degenerate = true;
    return hull;
  }

  std::vector<Face> faces;
  const Vec3 inner = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  auto add_oriented = [&](int a, int b, int c) {
    Face f = make_face(pts, a, b, c);
    if (f.distance(inner) > 0) f = make_face(pts, a, c, b);
    faces.push_back(f);
  };
  add_oriented(i0, i1, i2);
  add_oriented(i0, i1, i3);
  add_oriented(i0, i2, i3);
  add_oriented(i1, i2, i3);

  // Points are inserted farthest-first from the seed centroid, which keeps
  // the visible regions small and the facets well conditioned.
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (i != i0 && i != i1 && i != i2 && i != i3) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return (pts[a] - inner).squaredNorm() > (pts[b] - inner).squaredNorm();
  });

  std::vector<int> visible;
  std::map<std::pair<int, int>, int> edges;
  for (int p : order) {
    visible.clear();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      if (faces[f].alive && faces[f].distance(pts[p]) > eps) visible.push_back(f);
    }
    if (visible.empty()) continue;
    // Horizon: directed edges of visible faces whose twin is not visible.
    edges.clear();
    for (int f : visible) {
      const auto& v = faces[f].v;
      for (int k = 0; k < 3; ++k) edges[{v[k], v[(k + 1) % 3]}] += 1;
    }
    for (int f : visible) faces[f].alive = false;
    for (const auto& [e, count] : edges) {
      if (edges.count({e.second, e.first})) continue;
      Face nf = make_face(pts, e.first, e.second, p);
      if (!nf.normal.allFinite()) continue;
      faces.push_back(nf);
    }
    std::erase_if(faces, [](const Face& f) { return !f.alive; });
  }
  for (const auto& f : faces)
    if (f.alive) hull.triangles.push_back(f.v);
  return hull;
}

HullVolume convex_hull_volume(std::span<const Vec3> points) {
  const ConvexHull3 hull = convex_hull(points);
  if (hull.degenerate || hull.triangles.empty()) return {0.0, true};
  Vec3 ref = Vec3::Zero();
  for (const auto& t : hull.triangles) ref += hull.points[t[0]];
  ref /= static_cast<double>(hull.triangles.size());
  double vol = 0.0;
  for (const auto& t : hull.triangles) {
    const Vec3 a = hull.points[t[0]] - ref;
    const Vec3 b = hull.points[t[1]] - ref;
    const Vec3 c = hull.points[t[2]] - ref;
    vol += a.dot(b.cross(c));
  }
  return {std::abs(vol) / 6.0, false};
}

std::vector<Vec2> convex_hull_2d(std::span<const Vec2> input) {
  std::vector<Vec2> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

double footprint_area(std::span<const Vec3> points) {
  std::vector<Vec2> xy;
  xy.reserve(points.size());
  for (const auto& p : points) xy.emplace_back(p.x(), p.y());
  const auto hull = convex_hull_2d(xy);
  return hull.size() < 3 ? 0.0 : polygon_area(hull);
}

}  // namespace sg3d::geometry
