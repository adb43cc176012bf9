// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sg3d/error.hpp"
#include "sg3d/geometry/hull.hpp"
#include "sg3d/geometry/projection.hpp"
#include "sg3d/parallel.hpp"

namespace sg3d::graph {

namespace {

constexpr double kTieEps = 1e-9;
constexpr double kFloorNormalZ = 0.9;
constexpr double kFloorBand = 0.25;  // m above the lowest room vertex
constexpr double kFloorGap = 1.5;    // m between floor elevations

struct EdgeKindName {
  EdgeKind kind;
  std::string_view name;
};
constexpr EdgeKindName kEdgeNames[] = {
    {EdgeKind::kParentSpace, "parent_space"},
    {EdgeKind::kParentBuilding, "parent_building"},
    {EdgeKind::kParentSpaceCam, "parent_space_cam"},
    {EdgeKind::kSameParentRoom, "same_parent_room"},
    {EdgeKind::kSpatialOrder, "spatial_order"},
    {EdgeKind::kSpatialOrderRoom, "spatial_order_room"},
    {EdgeKind::kRelativeMagnitude, "relative_magnitude"},
    {EdgeKind::kRelativeMagnitudeRoom, "relative_magnitude_room"},
    {EdgeKind::kOcclusion, "occlusion"},
    {EdgeKind::kAmodalMask, "amodal_mask"},
};

Vec3 weighted_centroid(const TriMesh& mesh, std::span<const int> faces) {
  Vec3 sum = Vec3::Zero();
  double area = 0.0;
  for (int f : faces) {
    sum += mesh.face_areas[f] * mesh.face_center(f);
    area += mesh.face_areas[f];
  }
  if (area > 0.0) return sum / area;
  Vec3 mean = Vec3::Zero();
  for (int f : faces) mean += mesh.face_center(f);
  return faces.empty() ? mean : Vec3(mean / static_cast<double>(faces.size()));
}

// Point inside a closed convex hull (boundary counts as inside).
bool inside_hull(const geometry::ConvexHull3& hull, const Vec3& p) {
  if (hull.degenerate || hull.triangles.empty()) return false;
  for (const auto& t : hull.triangles) {
    const Vec3& a = hull.points[t[0]];
    const Vec3 n = (hull.points[t[1]] - a).cross(hull.points[t[2]] - a);
    if ((p - a).dot(n) > kTieEps * n.norm()) return false;
  }
  return true;
}

const char* lateral_name(Lateral l) {
  return l == Lateral::kLeft ? "left" : l == Lateral::kRight ? "right" : "ambiguous";
}
const char* depth_name(Depth d) {
  return d == Depth::kFront ? "front" : d == Depth::kBehind ? "behind" : "ambiguous";
}

nlohmann::json spatial_payload(const SpatialOrder& s) {
  return {{"lateral", lateral_name(s.lateral)}, {"depth", depth_name(s.depth)}};
}

// Objects that share at least one amodal pixel in this raster.
bool amodal_overlap(const CameraRaster& raster, int a, int b) {
  const auto ia = raster.amodal.find(a), ib = raster.amodal.find(b);
  if (ia == raster.amodal.end() || ib == raster.amodal.end()) return false;
  auto x = ia->second.begin(), y = ib->second.begin();
  while (x != ia->second.end() && y != ib->second.end()) {
    if (x->first < y->first) {
      ++x;
    } else if (y->first < x->first) {
      ++y;
    } else {
      return true;
    }
  }
  return false;
}

std::pair<int, int> raster_size(const CameraNode& cam, const GraphOptions& options) {
  if (cam.panoramic()) return {options.amodal_width, options.amodal_width / 2};
  return {cam.width, cam.height};
}

void sort_edges(std::vector<Edge>& edges) {
  std::vector<std::pair<std::string, std::size_t>> keys;
  keys.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) keys.emplace_back(edges[i].id(), i);
  std::sort(keys.begin(), keys.end());
  std::vector<Edge> sorted;
  sorted.reserve(edges.size());
  for (const auto& [id, i] : keys) sorted.push_back(std::move(edges[i]));
  edges = std::move(sorted);
}

// Emits object edges; when `only` is set, just the ones touching those
// objects, and no edges without an object endpoint.
void emit_edges(SceneGraph& g, const FaceLabelMap& labels, const GraphInputs& in, const GraphOptions& options,
                const std::set<int>* only) {
  auto touches = [&](int a) { return !only || only->count(a) > 0; };
  std::vector<Edge>& out = g.edges;

  if (!only) {
    for (const auto& r : g.rooms)
      out.push_back({EdgeKind::kParentBuilding, {room_ref(r.id), building_ref(g.building.id)}, nlohmann::json::object()});
    for (const auto& c : g.cameras)
      if (c.parent_room)
        out.push_back({EdgeKind::kParentSpaceCam, {camera_ref(c.id), room_ref(*c.parent_room)}, nlohmann::json::object()});
    for (const auto& a : g.rooms)
      for (const auto& b : g.rooms) {
        if (a.id == b.id) continue;
        if (b.volume > 0.0 && !b.volume_degenerate)
          out.push_back({EdgeKind::kRelativeMagnitudeRoom,
                         {room_ref(a.id), room_ref(b.id)},
                         {{"ratio", relative_magnitude(a.volume, b.volume)}}});
        for (const auto& c : g.cameras)
          out.push_back({EdgeKind::kSpatialOrderRoom,
                         {room_ref(a.id), room_ref(b.id), camera_ref(c.id)},
                         spatial_payload(spatial_order(a.location, b.location, c))});
      }
  }

  for (std::size_t i = 0; i < g.objects.size(); ++i) {
    const ObjectNode& a = g.objects[i];
    for (std::size_t j = 0; j < g.objects.size(); ++j) {
      if (i == j) continue;
      const ObjectNode& b = g.objects[j];
      if (!touches(a.id) && !touches(b.id)) continue;
      if (i < j && a.parent_room && a.parent_room == b.parent_room)
        out.push_back({EdgeKind::kSameParentRoom,
                       {object_ref(a.id), object_ref(b.id), room_ref(*a.parent_room)},
                       nlohmann::json::object()});
      if (b.volume > 0.0 && !b.volume_degenerate)
        out.push_back({EdgeKind::kRelativeMagnitude,
                       {object_ref(a.id), object_ref(b.id)},
                       {{"ratio", relative_magnitude(a.volume, b.volume)}}});
    }
  }

  const std::vector<int>& face_object = labels.instance_ids;
  for (const auto& cam : g.cameras) {
    const auto [w, h] = raster_size(cam, options);
    const CameraRaster raster = rasterize_camera(cam, face_object, in.mesh, in.bvh, w, h, options.threads);
    for (const auto& o : g.objects) {
      if (!touches(o.id)) continue;
      BinaryMask vis(w, h), occ(w, h);
      std::size_t nv = 0, no = 0;
      if (auto it = raster.amodal.find(o.id); it != raster.amodal.end()) {
        for (const auto& [p, state] : it->second) {
          if (state == Trimap::kVisible) {
            vis.set(p % w, p / w);
            ++nv;
          } else {
            occ.set(p % w, p / w);
            ++no;
          }
        }
      }
      Edge e{EdgeKind::kAmodalMask, {object_ref(o.id), camera_ref(cam.id)}, nlohmann::json::object()};
      const std::string id = e.id();
      e.payload = {{"mask", id},
                   {"width", w},
                   {"height", h},
                   {"visible_pixels", nv},
                   {"occluded_pixels", no},
                   {"degenerate", camera_inside_object(o, cam, in.mesh)}};
      g.amodal_masks[id] = AmodalMask{rle_encode(vis), rle_encode(occ)};
      out.push_back(std::move(e));
    }
    for (const auto& a : g.objects) {
      for (const auto& b : g.objects) {
        if (a.id == b.id || (!touches(a.id) && !touches(b.id))) continue;
        const bool same_room = a.parent_room && a.parent_room == b.parent_room;
        if (!options.all_pairs && !same_room && !amodal_overlap(raster, a.id, b.id)) continue;
        const std::vector<std::string> ends{object_ref(a.id), object_ref(b.id), camera_ref(cam.id)};
        out.push_back({EdgeKind::kSpatialOrder, ends, spatial_payload(spatial_order(a.location, b.location, cam))});
        const OcclusionPayload occ = occlusion_relationship(a.id, b.id, raster);
        nlohmann::json p = {{"occluder", nullptr},
                            {"occlusion_fraction", 0.0},
                            {"a_occludes_b", occ.a_occludes_b},
                            {"b_occludes_a", occ.b_occludes_a}};
        if (occ.occluder) {
          p["occluder"] = object_ref(*occ.occluder);
          p["occlusion_fraction"] = *occ.occluder == a.id ? occ.a_occludes_b : occ.b_occludes_a;
        }
        out.push_back({EdgeKind::kOcclusion, ends, std::move(p)});
      }
    }
  }
}

std::vector<geometry::ConvexHull3> room_hulls(const std::vector<RoomNode>& rooms, const TriMesh& mesh) {
  std::vector<geometry::ConvexHull3> hulls;
  hulls.reserve(rooms.size());
  for (const auto& r : rooms) {
    const auto pts = mesh.face_vertices(r.face_ids);
    hulls.push_back(geometry::convex_hull(pts));
  }
  return hulls;
}

}  // namespace

// --- naming ----------------------------------------------------------------

std::string_view to_string(EdgeKind kind) {
  for (const auto& e : kEdgeNames)
    if (e.kind == kind) return e.name;
  return "unknown";
}

EdgeKind edge_kind_from_string(std::string_view name) {
  for (const auto& e : kEdgeNames)
    if (e.name == name) return e.kind;
  throw Error(ErrorCode::kFormat, "unknown edge kind '" + std::string(name) + "'");
}

std::string object_ref(int id) { return "object:" + std::to_string(id); }
std::string room_ref(const std::string& id) { return "room:" + id; }
std::string camera_ref(const std::string& id) { return "camera:" + id; }
std::string building_ref(const std::string& id) { return "building:" + id; }

std::string Edge::id() const {
  std::string s(to_string(kind));
  s += ':';
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    if (i) s += ',';
    s += endpoints[i];
  }
  return s;
}

const ObjectNode* SceneGraph::find_object(int id) const {
  const auto it =
      std::lower_bound(objects.begin(), objects.end(), id, [](const ObjectNode& o, int v) { return o.id < v; });
  return it != objects.end() && it->id == id ? &*it : nullptr;
}

CameraNode camera_from_panorama(const meshio::Panorama& pano) {
  CameraNode c;
  c.id = pano.id;
  c.pose = pano.pose;
  c.fov = 360.0;
  c.modality = "panoramic";
  c.width = pano.width;
  c.height = pano.height;
  return c;
}

// --- attributes ------------------------------------------------------------

ObjectNode build_object(int id, int class_id, std::vector<int> faces, const TriMesh& mesh,
                        const detector::ClassVocabulary& vocabulary, double voxel_cell) {
  if (faces.empty()) throw Error(ErrorCode::kEmptyGeometry, "object " + std::to_string(id) + " has no faces");
  std::sort(faces.begin(), faces.end());
  ObjectNode o;
  o.id = id;
  o.class_id = class_id;
  o.class_name = vocabulary.name(class_id);
  o.location = weighted_centroid(mesh, faces);
  o.size = mesh.bounds(faces).extent();
  const auto verts = mesh.face_vertices(faces);
  const auto hull = geometry::convex_hull_volume(verts);
  o.volume = hull.volume;
  o.volume_degenerate = hull.degenerate;
  o.floor_area = geometry::footprint_area(verts);
  o.voxel_occupancy = geometry::voxelize(mesh, faces, voxel_cell);
  o.face_ids = std::move(faces);
  return o;
}

std::vector<ObjectNode> build_objects(const FaceLabelMap& labels, const TriMesh& mesh,
                                      const detector::ClassVocabulary& vocabulary, double voxel_cell) {
  if (labels.size() != mesh.num_faces())
    throw Error(ErrorCode::kDimensionMismatch, "face labels do not match the mesh");
  const auto classes = labels.instance_classes();
  std::vector<ObjectNode> out;
  for (auto& [id, faces] : labels.instance_faces()) {
    ObjectNode o = build_object(id, classes.at(id), faces, mesh, vocabulary, voxel_cell);
    const auto it = labels.instance_confidence.find(id);
    o.confidence = it != labels.instance_confidence.end() ? it->second : 1.0;
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<RoomNode> build_rooms(const std::vector<meshio::RoomAnnotation>& rooms, const TriMesh& mesh,
                                  double voxel_cell) {
  std::vector<RoomNode> out;
  for (const auto& ann : rooms) {
    if (ann.face_ids.empty()) throw Error(ErrorCode::kEmptyGeometry, "room '" + ann.room_id + "' has no faces");
    RoomNode r;
    r.id = ann.room_id;
    r.scene_category = ann.scene_category;
    r.face_ids = ann.face_ids;
    std::sort(r.face_ids.begin(), r.face_ids.end());
    const Aabb box = mesh.bounds(r.face_ids);
    r.size = box.extent();
    r.floor_elevation = box.min.z();
    std::vector<int> floor;
    for (int f : r.face_ids) {
      const Vec3 n = mesh.face_cross(f);
      const double len = n.norm();
      if (len > 0.0 && std::abs(n.z()) / len > kFloorNormalZ &&
          mesh.face_center(f).z() <= r.floor_elevation + kFloorBand)
        floor.push_back(f);
    }
    const auto verts = mesh.face_vertices(r.face_ids);
    if (!floor.empty()) {
      r.location = weighted_centroid(mesh, floor);
      for (int f : floor) r.floor_area += mesh.face_areas[f];
    } else {
      r.location = weighted_centroid(mesh, r.face_ids);
      r.floor_area = geometry::footprint_area(verts);
    }
    const auto hull = geometry::convex_hull_volume(verts);
    r.volume = hull.volume;
    r.volume_degenerate = hull.degenerate;
    r.voxel_occupancy = geometry::voxelize(mesh, r.face_ids, voxel_cell);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const RoomNode& a, const RoomNode& b) { return a.id < b.id; });
  return out;
}

BuildingNode build_building(const std::vector<RoomNode>& rooms, const TriMesh& mesh) {
  BuildingNode b;
  for (const auto& r : rooms) b.area += r.floor_area;
  const auto hull = geometry::convex_hull_volume(mesh.vertices);
  b.volume = hull.volume;
  b.volume_degenerate = hull.degenerate;
  const Aabb box = mesh.bounds();
  b.size = box.extent();
  b.reference_center = box.empty() ? Vec3::Zero() : box.center();
  std::vector<double> z;
  for (const auto& r : rooms) z.push_back(r.floor_elevation);
  std::sort(z.begin(), z.end());
  b.num_floors = 1;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i] - z[i - 1] > kFloorGap) ++b.num_floors;
  return b;
}

std::vector<Edge> assign_parent_rooms(std::vector<ObjectNode>& objects, const std::vector<RoomNode>& rooms,
                                      const TriMesh& mesh) {
  std::vector<int> face_room(mesh.num_faces(), -1);
  for (std::size_t r = 0; r < rooms.size(); ++r)
    for (int f : rooms[r].face_ids) face_room[f] = static_cast<int>(r);
  std::vector<Edge> edges;
  for (auto& o : objects) {
    o.parent_room.reset();
    o.unassigned_geometry = false;
    if (rooms.empty()) {
      o.unassigned_geometry = true;
      continue;
    }
    std::vector<double> area(rooms.size(), 0.0);
    double total = 0.0;
    for (int f : o.face_ids) {
      total += mesh.face_areas[f];
      if (face_room[f] >= 0) area[face_room[f]] += mesh.face_areas[f];
    }
    const auto best = static_cast<std::size_t>(std::max_element(area.begin(), area.end()) - area.begin());
    std::size_t parent = best;
    double fraction = total > 0.0 ? area[best] / total : 0.0;
    if (area[best] <= 0.0) {
      o.unassigned_geometry = true;
      fraction = 0.0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rooms.size(); ++r) {
        const double d = (rooms[r].location - o.location).norm();
        if (d < best_d) {
          best_d = d;
          parent = r;
        }
      }
    }
    o.parent_room = rooms[parent].id;
    edges.push_back({EdgeKind::kParentSpace,
                     {object_ref(o.id), room_ref(rooms[parent].id)},
                     {{"area_fraction", fraction}, {"unassigned_geometry", o.unassigned_geometry}}});
  }
  return edges;
}

// --- relationships ---------------------------------------------------------

Vec3 camera_ray(const CameraNode& camera, int u, int v, int width, int height) {
  if (camera.panoramic()) return camera.pose.rotation * geometry::pano_pixel_to_dir(u, v, width, height);
  geometry::RectCamera rc;
  rc.pose = camera.pose;
  rc.fov_deg = camera.fov;
  rc.width = width;
  rc.height = height;
  return rc.pixel_dir_world(u, v);
}

bool camera_inside_object(const ObjectNode& object, const CameraNode& camera, const TriMesh& mesh) {
  const auto pts = mesh.face_vertices(object.face_ids);
  return inside_hull(geometry::convex_hull(pts), camera.pose.position);
}

std::vector<Trimap> amodal_mask(const ObjectNode& object, const CameraNode& camera, const TriMesh& mesh,
                                const geometry::Bvh& bvh, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kConfig, "amodal raster must be non-empty");
  std::vector<Trimap> out(static_cast<std::size_t>(width) * height, Trimap::kEmpty);
  (void)mesh;
  auto in_object = [&](int f) { return std::binary_search(object.face_ids.begin(), object.face_ids.end(), f); };
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const auto hits = bvh.all_hits(camera.pose.position, camera_ray(camera, u, v, width, height));
      if (hits.empty()) continue;
      const geometry::RayHit* first = &hits.front();
      bool any = false;
      for (const auto& h : hits) {
        if (geometry::closer_hit(h.t, h.face_id, first->t, first->face_id)) first = &h;
        any = any || in_object(h.face_id);
      }
      auto& px = out[static_cast<std::size_t>(v) * width + u];
      if (in_object(first->face_id))
        px = Trimap::kVisible;
      else if (any)
        px = Trimap::kOccluded;
    }
  }
  return out;
}

CameraRaster rasterize_camera(const CameraNode& camera, const std::vector<int>& face_object, const TriMesh& mesh,
                              const geometry::Bvh& bvh, int width, int height, int threads) {
  if (face_object.size() != mesh.num_faces())
    throw Error(ErrorCode::kDimensionMismatch, "face ownership does not match the mesh");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kConfig, "amodal raster must be non-empty");
  CameraRaster r;
  r.width = width;
  r.height = height;
  r.first_object.assign(static_cast<std::size_t>(width) * height, 0);
  struct Entry {
    int object;
    int pixel;
    Trimap state;
  };
  std::vector<std::vector<Entry>> rows(height);
  parallel_for(static_cast<std::size_t>(height), threads, [&](std::size_t vi) {
    const int v = static_cast<int>(vi);
    std::vector<int> seen;
    for (int u = 0; u < width; ++u) {
      const int p = v * width + u;
      const auto hits = bvh.all_hits(camera.pose.position, camera_ray(camera, u, v, width, height));
      if (hits.empty()) continue;
      const geometry::RayHit* first = &hits.front();
      seen.clear();
      for (const auto& h : hits) {
        if (geometry::closer_hit(h.t, h.face_id, first->t, first->face_id)) first = &h;
        if (const int o = face_object[h.face_id]; o != 0) seen.push_back(o);
      }
      const int front = face_object[first->face_id];
      r.first_object[p] = front;
      std::sort(seen.begin(), seen.end());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      for (int o : seen) rows[vi].push_back({o, p, o == front ? Trimap::kVisible : Trimap::kOccluded});
    }
  });
  for (const auto& row : rows)
    for (const auto& e : row) r.amodal[e.object].emplace_back(e.pixel, e.state);
  return r;
}

OcclusionPayload occlusion_relationship(int a, int b, const CameraRaster& raster) {
  auto fraction = [&](int occluder, int target) {
    const auto it = raster.amodal.find(target);
    if (it == raster.amodal.end() || it->second.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& [p, state] : it->second) n += raster.first_object[p] == occluder;
    return static_cast<double>(n) / static_cast<double>(it->second.size());
  };
  OcclusionPayload out;
  out.a_occludes_b = fraction(a, b);
  out.b_occludes_a = fraction(b, a);
  if (out.a_occludes_b > out.b_occludes_a)
    out.occluder = a;
  else if (out.b_occludes_a > out.a_occludes_b)
    out.occluder = b;
  else if (out.a_occludes_b > 0.0)
    out.occluder = std::min(a, b);  // mutual and equal: stable under argument swap
  return out;
}

SpatialOrder spatial_order(const Vec3& a, const Vec3& b, const CameraNode& camera) {
  const Vec3 pa = camera.pose.to_camera(a), pb = camera.pose.to_camera(b);
  Vec3 fwd(0.0, 1.0, 0.0), right(1.0, 0.0, 0.0);
  if (camera.panoramic()) {
    const Vec3 m = 0.5 * (pa + pb);
    const double len = std::hypot(m.x(), m.y());
    if (len > kTieEps) {
      fwd = Vec3(m.x() / len, m.y() / len, 0.0);
      right = Vec3(fwd.y(), -fwd.x(), 0.0);
    }
  }
  SpatialOrder s;
  const double dx = right.dot(pa) - right.dot(pb);
  const double dy = fwd.dot(pa) - fwd.dot(pb);
  if (std::abs(dx) >= kTieEps) s.lateral = dx < 0.0 ? Lateral::kLeft : Lateral::kRight;
  if (std::abs(dy) >= kTieEps) s.depth = dy < 0.0 ? Depth::kFront : Depth::kBehind;
  return s;
}

double relative_magnitude(double volume_a, double volume_b) {
  if (!(volume_b > 0.0)) throw Error(ErrorCode::kUndefinedRatio, "reference volume is zero");
  return volume_a / volume_b;
}

// --- assembly --------------------------------------------------------------

void finalize_graph(SceneGraph& graph, const FaceLabelMap& labels, const GraphInputs& inputs,
                    const GraphOptions& options) {
  graph.edges.clear();
  graph.amodal_masks.clear();
  graph.building = build_building(graph.rooms, inputs.mesh);
  graph.building.function = options.building_function;
  graph.edges = assign_parent_rooms(graph.objects, graph.rooms, inputs.mesh);
  const auto hulls = room_hulls(graph.rooms, inputs.mesh);
  for (auto& c : graph.cameras) {
    c.parent_room.reset();
    for (std::size_t r = 0; r < graph.rooms.size(); ++r) {
      if (inside_hull(hulls[r], c.pose.position)) {
        c.parent_room = graph.rooms[r].id;
        break;
      }
    }
  }
  emit_edges(graph, labels, inputs, options, nullptr);
  sort_edges(graph.edges);
}

SceneGraph build_scene_graph(const FaceLabelMap& labels, const GraphInputs& inputs, const GraphOptions& options) {
  SceneGraph g;
  g.rooms = build_rooms(inputs.rooms, inputs.mesh, options.voxel_cell);
  g.objects = build_objects(labels, inputs.mesh, inputs.vocabulary, options.voxel_cell);
  g.cameras = inputs.cameras;
  std::sort(g.cameras.begin(), g.cameras.end(), [](const CameraNode& a, const CameraNode& b) { return a.id < b.id; });
  finalize_graph(g, labels, inputs, options);
  return g;
}

void update_objects(SceneGraph& graph, const FaceLabelMap& labels, const std::set<int>& object_ids,
                    const GraphInputs& inputs, const GraphOptions& options) {
  if (labels.size() != inputs.mesh.num_faces())
    throw Error(ErrorCode::kDimensionMismatch, "face labels do not match the mesh");
  const auto faces = labels.instance_faces();
  const auto classes = labels.instance_classes();
  auto confidence = [&](int id) {
    const auto it = labels.instance_confidence.find(id);
    return it != labels.instance_confidence.end() ? it->second : 1.0;
  };

  // Anything whose faces, class or confidence moved is affected too, so the
  // result cannot drift from a full rebuild.
  std::set<int> affected = object_ids;
  for (const auto& o : graph.objects) {
    const auto it = faces.find(o.id);
    if (it == faces.end() || it->second != o.face_ids || classes.at(o.id) != o.class_id ||
        confidence(o.id) != o.confidence)
      affected.insert(o.id);
  }
  for (const auto& [id, f] : faces)
    if (!graph.find_object(id)) affected.insert(id);

  std::vector<ObjectNode> kept;
  for (auto& o : graph.objects)
    if (!affected.count(o.id)) kept.push_back(std::move(o));
  std::vector<ObjectNode> rebuilt;
  for (int id : affected) {
    const auto it = faces.find(id);
    if (it == faces.end()) continue;
    ObjectNode o = build_object(id, classes.at(id), it->second, inputs.mesh, inputs.vocabulary, options.voxel_cell);
    o.confidence = confidence(id);
    rebuilt.push_back(std::move(o));
  }
  auto parent_edges = assign_parent_rooms(rebuilt, graph.rooms, inputs.mesh);
  for (auto& o : rebuilt) kept.push_back(std::move(o));
  std::sort(kept.begin(), kept.end(), [](const ObjectNode& a, const ObjectNode& b) { return a.id < b.id; });
  graph.objects = std::move(kept);

  std::set<std::string> refs;
  for (int id : affected) refs.insert(object_ref(id));
  std::erase_if(graph.edges, [&](const Edge& e) {
    return std::any_of(e.endpoints.begin(), e.endpoints.end(), [&](const std::string& s) { return refs.count(s); });
  });
  std::erase_if(graph.amodal_masks, [&](const auto& kv) {
    const std::string& id = kv.first;
    const auto colon = id.find(':');
    const auto comma = id.find(',');
    return refs.count(id.substr(colon + 1, comma - colon - 1)) > 0;
  });
  for (auto& e : parent_edges) graph.edges.push_back(std::move(e));
  emit_edges(graph, labels, inputs, options, &affected);
  sort_edges(graph.edges);
}

}  // namespace sg3d::graph
