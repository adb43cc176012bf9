// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Slow reference computations shared by the graph tests and the acceptance
// gate. Nothing here calls the graph builder's own rasterizer or emitter.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sg3d/geometry/bvh.hpp"
#include "sg3d/geometry/projection.hpp"
#include "sg3d/graph.hpp"

namespace sg3d::testing {

/// Trimaps of several objects from one panoramic camera, straight from
/// all_hits: visible where the nearest hit belongs to the object, occluded
/// where any farther hit does.
inline std::map<int, std::vector<graph::Trimap>> trimap_oracle(const std::map<int, std::vector<int>>& objects,
                                                               const graph::CameraNode& cam,
                                                               const geometry::Bvh& bvh, int w, int h) {
  std::map<int, int> owner;
  std::map<int, std::vector<graph::Trimap>> out;
  for (const auto& [id, faces] : objects) {
    for (int f : faces) owner[f] = id;
    out[id].assign(static_cast<std::size_t>(w) * h, graph::Trimap::kEmpty);
  }
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Vec3 d = cam.pose.rotation * geometry::pano_pixel_to_dir(u, v, w, h);
      const auto hits = bvh.all_hits(cam.pose.position, d);
      if (hits.empty()) continue;
      std::size_t first = 0;
      for (std::size_t i = 1; i < hits.size(); ++i)
        if (geometry::closer_hit(hits[i].t, hits[i].face_id, hits[first].t, hits[first].face_id)) first = i;
      const std::size_t p = static_cast<std::size_t>(v) * w + u;
      for (const auto& hit : hits) {
        const auto it = owner.find(hit.face_id);
        if (it != owner.end() && out[it->second][p] == graph::Trimap::kEmpty) out[it->second][p] = graph::Trimap::kOccluded;
      }
      if (const auto it = owner.find(hits[first].face_id); it != owner.end()) out[it->second][p] = graph::Trimap::kVisible;
    }
  return out;
}

inline std::vector<graph::Trimap> trimap_oracle(const std::vector<int>& faces, const graph::CameraNode& cam,
                                                const geometry::Bvh& bvh, int w, int h) {
  return trimap_oracle(std::map<int, std::vector<int>>{{0, faces}}, cam, bvh, w, h).at(0);
}

/// Every edge id the emission policy calls for, enumerated from the node
/// tables. Parents are recomputed here: an object's room by majority face
/// area, a camera's room by bounding box (the synthetic rooms are boxes).
/// Panoramic cameras only; masks are w x h.
inline std::set<std::string> enumerate_edges(const graph::SceneGraph& g, const TriMesh& mesh,
                                             const std::vector<meshio::RoomAnnotation>& rooms,
                                             const geometry::Bvh& bvh, int w, int h) {
  std::set<std::string> out;
  std::map<int, std::string> room_of_face;
  for (const auto& r : rooms)
    for (int f : r.face_ids) room_of_face[f] = r.room_id;
  std::map<int, std::string> parent;  // empty when no face lies in a room
  for (const auto& o : g.objects) {
    std::map<std::string, double> area;
    for (int f : o.face_ids)
      if (room_of_face.count(f)) area[room_of_face[f]] += mesh.face_areas[f];
    std::string best;
    double best_area = -1;
    for (const auto& [r, a] : area)
      if (a > best_area) best = r, best_area = a;
    parent[o.id] = best;
    if (!best.empty()) out.insert("parent_space:object:" + std::to_string(o.id) + ",room:" + best);
  }
  for (const auto& r : rooms) out.insert("parent_building:room:" + r.room_id + ",building:building");
  for (const auto& c : g.cameras) {
    for (const auto& r : rooms) {
      const Aabb box = mesh.bounds(r.face_ids);
      const Vec3& p = c.pose.position;
      if ((p.array() >= box.min.array()).all() && (p.array() <= box.max.array()).all()) {
        out.insert("parent_space_cam:camera:" + c.id + ",room:" + r.room_id);
        break;
      }
    }
  }
  for (const auto& a : g.rooms)
    for (const auto& b : g.rooms) {
      if (a.id == b.id) continue;
      if (b.volume > 0.0 && !b.volume_degenerate) out.insert("relative_magnitude_room:room:" + a.id + ",room:" + b.id);
      for (const auto& c : g.cameras) out.insert("spatial_order_room:room:" + a.id + ",room:" + b.id + ",camera:" + c.id);
    }
  const auto ref = [](int id) { return "object:" + std::to_string(id); };
  const auto same_room = [&](int a, int b) { return !parent[a].empty() && parent[a] == parent[b]; };
  std::map<int, std::vector<int>> faces;
  for (const auto& o : g.objects) faces[o.id] = o.face_ids;
  for (const auto& a : g.objects)
    for (const auto& b : g.objects) {
      if (a.id == b.id) continue;
      if (a.id < b.id && same_room(a.id, b.id))
        out.insert("same_parent_room:" + ref(a.id) + "," + ref(b.id) + ",room:" + parent[a.id]);
      if (b.volume > 0.0 && !b.volume_degenerate) out.insert("relative_magnitude:" + ref(a.id) + "," + ref(b.id));
    }
  for (const auto& c : g.cameras) {
    std::map<int, std::set<int>> amodal;
    for (const auto& [id, t] : trimap_oracle(faces, c, bvh, w, h)) {
      out.insert("amodal_mask:" + ref(id) + ",camera:" + c.id);
      for (int p = 0; p < w * h; ++p)
        if (t[p] != graph::Trimap::kEmpty) amodal[id].insert(p);
    }
    for (const auto& a : g.objects)
      for (const auto& b : g.objects) {
        if (a.id == b.id) continue;
        bool overlap = false;
        for (int p : amodal[a.id]) overlap = overlap || amodal[b.id].count(p);
        if (same_room(a.id, b.id) || overlap) {
          out.insert("spatial_order:" + ref(a.id) + "," + ref(b.id) + ",camera:" + c.id);
          out.insert("occlusion:" + ref(a.id) + "," + ref(b.id) + ",camera:" + c.id);
        }
      }
  }
  return out;
}

}  // namespace sg3d::testing
