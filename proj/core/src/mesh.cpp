// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/mesh.hpp"

#include <algorithm>
#include <unordered_map>


namespace sg3d {

void TriMesh::recompute_areas() {
  face_areas.resize(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    face_areas[f] = 0.5 * face_cross(static_cast<int>(f)).norm();
  }
}

int TriMesh::drop_degenerate_faces(double min_area) {
  recompute_areas();
  std::size_t kept = 0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (face_areas[f] >= min_area) {
      faces[kept] = faces[f];
      face_areas[kept] = face_areas[f];
      ++kept;
    }
  }
  const int dropped = static_cast<int>(faces.size() - kept);
  faces.resize(kept);
  face_areas.resize(kept);
  return dropped;
}

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k) box.extend(vertices[f[k]]);
  return box;
}

Aabb TriMesh::bounds(std::span<const int> face_subset) const {
  Aabb box;
  for (int f : face_subset)
    for (int k = 0; k < 3; ++k) box.extend(corner(f, k));
  return box;
}

std::vector<Vec3> TriMesh::face_vertices(std::span<const int> face_subset) const {
  std::vector<int> ids;
  ids.reserve(face_subset.size() * 3);
  for (int f : face_subset)
    for (int k = 0; k < 3; ++k) ids.push_back(faces[f][k]);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<Vec3> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(vertices[i]);
  return out;
}

MeshAdjacency::MeshAdjacency(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.faces.size());
  std::unordered_map<std::uint64_t, std::vector<int>> edge_faces;
  edge_faces.reserve(mesh.faces.size() * 2);
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (int f = 0; f < n; ++f) {
    const auto& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) edge_faces[key(t[k], t[(k + 1) % 3])].push_back(f);
  }
  std::vector<std::vector<int>> lists(n);
  for (auto& [_, fs] : edge_faces) {
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = 0; j < fs.size(); ++j)
        if (i != j) lists[fs[i]].push_back(fs[j]);
  }
  offsets_.assign(n + 1, 0);
  for (int f = 0; f < n; ++f) {
    auto& l = lists[f];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    offsets_[f + 1] = offsets_[f] + static_cast<int>(l.size());
  }
  neighbors_.reserve(offsets_[n]);
  for (auto& l : lists) neighbors_.insert(neighbors_.end(), l.begin(), l.end());
}

}  // namespace sg3d
