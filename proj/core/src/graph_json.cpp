// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "sg3d/detector.hpp"
#include "sg3d/error.hpp"
#include "sg3d/graph.hpp"

namespace sg3d::graph {

namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kFormat, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

// Expected endpoint layers per edge kind.
std::vector<std::string_view> arity(EdgeKind k) {
  switch (k) {
    case EdgeKind::kParentSpace: return {"object", "room"};
    case EdgeKind::kParentBuilding: return {"room", "building"};
    case EdgeKind::kParentSpaceCam: return {"camera", "room"};
    case EdgeKind::kSameParentRoom: return {"object", "object", "room"};
    case EdgeKind::kSpatialOrder: return {"object", "object", "camera"};
    case EdgeKind::kSpatialOrderRoom: return {"room", "room", "camera"};
    case EdgeKind::kRelativeMagnitude: return {"object", "object"};
    case EdgeKind::kRelativeMagnitudeRoom: return {"room", "room"};
    case EdgeKind::kOcclusion: return {"object", "object", "camera"};
    case EdgeKind::kAmodalMask: return {"object", "camera"};
  }
  return {};
}

bool one_of(const json& v, std::initializer_list<const char*> names) {
  if (!v.is_string()) return false;
  const auto& s = v.get_ref<const std::string&>();
  return std::any_of(names.begin(), names.end(), [&](const char* n) { return s == n; });
}

// Returns a problem description, or empty when the payload fits the kind.
std::string check_payload(EdgeKind k, const json& p) {
  if (!p.is_object()) return "payload is not an object";
  auto number = [&](const char* key) { return p.contains(key) && p.at(key).is_number(); };
  auto fraction = [&](const char* key) {
    return number(key) && p.at(key).get<double>() >= 0.0 && p.at(key).get<double>() <= 1.0;
  };
  switch (k) {
    case EdgeKind::kParentSpace:
      if (!fraction("area_fraction") || !p.contains("unassigned_geometry") || !p["unassigned_geometry"].is_boolean())
        return "parent_space needs area_fraction and unassigned_geometry";
      break;
    case EdgeKind::kSpatialOrder:
    case EdgeKind::kSpatialOrderRoom:
      if (!p.contains("lateral") || !one_of(p["lateral"], {"left", "right", "ambiguous"}) || !p.contains("depth") ||
          !one_of(p["depth"], {"front", "behind", "ambiguous"}))
        return "spatial order needs lateral and depth";
      break;
    case EdgeKind::kRelativeMagnitude:
    case EdgeKind::kRelativeMagnitudeRoom:
      if (!number("ratio") || p["ratio"].get<double>() < 0.0) return "relative magnitude needs a ratio >= 0";
      break;
    case EdgeKind::kOcclusion:
      if (!p.contains("occluder") || !(p["occluder"].is_null() || p["occluder"].is_string()) ||
          !fraction("occlusion_fraction") || !fraction("a_occludes_b") || !fraction("b_occludes_a"))
        return "occlusion needs occluder and fractions";
      break;
    case EdgeKind::kAmodalMask:
      if (!p.contains("mask") || !p["mask"].is_string() || !number("width") || !number("height") ||
          !number("visible_pixels") || !number("occluded_pixels") || !p.contains("degenerate") ||
          !p["degenerate"].is_boolean())
        return "amodal_mask needs mask, size, pixel counts and degenerate";
      break;
    default:
      break;
  }
  return {};
}

}  // namespace

json voxels_to_json(const geometry::VoxelGrid& grid) {
  json runs = json::array();
  bool state = false;
  std::uint64_t run = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.test(i) != state) {
      runs.push_back(run);
      state = !state;
      run = 0;
    }
    ++run;
  }
  runs.push_back(run);
  const auto& d = grid.dims();
  return {{"origin", vec_json(grid.origin())},
          {"cell_size", grid.cell_size()},
          {"dims", {d[0], d[1], d[2]}},
          {"occupied", grid.count()},
          {"runs", runs}};
}

geometry::VoxelGrid voxels_from_json(const json& j) {
  const auto dims = j.at("dims").get<std::array<int, 3>>();
  geometry::VoxelGrid grid(vec_from(j.at("origin")), j.at("cell_size").get<double>(), dims);
  std::size_t pos = 0;
  bool state = false;
  for (const auto& r : j.at("runs")) {
    const auto n = r.get<std::uint64_t>();
    if (pos + n > grid.size()) throw Error(ErrorCode::kFormat, "voxel runs exceed the grid");
    if (state)
      for (std::size_t i = 0; i < n; ++i) grid.set(pos + i);
    pos += n;
    state = !state;
  }
  if (pos != grid.size()) throw Error(ErrorCode::kFormat, "voxel runs do not cover the grid");
  return grid;
}

json to_json(const SceneGraph& g) {
  const auto& b = g.building;
  json building = {{"id", b.id},
                   {"function", opt_json(b.function)},
                   {"num_floors", b.num_floors},
                   {"area", b.area},
                   {"volume", b.volume},
                   {"volume_degenerate", b.volume_degenerate},
                   {"size", vec_json(b.size)},
                   {"reference_center", vec_json(b.reference_center)}};
  json rooms = json::array();
  for (const auto& r : g.rooms) {
    rooms.push_back({{"id", r.id},
                     {"scene_category", opt_json(r.scene_category)},
                     {"location", vec_json(r.location)},
                     {"floor_area", r.floor_area},
                     {"floor_elevation", r.floor_elevation},
                     {"size", vec_json(r.size)},
                     {"volume", r.volume},
                     {"volume_degenerate", r.volume_degenerate},
                     {"face_ids", r.face_ids},
                     {"voxel_occupancy", voxels_to_json(r.voxel_occupancy)}});
  }
  json objects = json::array();
  for (const auto& o : g.objects) {
    objects.push_back({{"id", o.id},
                       {"class_id", o.class_id},
                       {"class_name", o.class_name},
                       {"confidence", o.confidence},
                       {"location", vec_json(o.location)},
                       {"size", vec_json(o.size)},
                       {"volume", o.volume},
                       {"volume_degenerate", o.volume_degenerate},
                       {"floor_area", o.floor_area},
                       {"face_ids", o.face_ids},
                       {"voxel_occupancy", voxels_to_json(o.voxel_occupancy)},
                       {"material", opt_json(o.material)},
                       {"texture", opt_json(o.texture)},
                       {"action_affordance", opt_json(o.action_affordance)},
                       {"parent_room", opt_json(o.parent_room)},
                       {"unassigned_geometry", o.unassigned_geometry}});
  }
  json cameras = json::array();
  for (const auto& c : g.cameras) {
    const Quat& q = c.pose.rotation;
    cameras.push_back({{"id", c.id},
                       {"pose", {{"position", vec_json(c.pose.position)}, {"quaternion", {q.w(), q.x(), q.y(), q.z()}}}},
                       {"fov", c.fov},
                       {"modality", c.modality},
                       {"resolution", {c.width, c.height}},
                       {"parent_room", opt_json(c.parent_room)}});
  }
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"id", e.id()}, {"kind", to_string(e.kind)}, {"endpoints", e.endpoints}, {"payload", e.payload}});
  json masks = json::object();
  for (const auto& [id, m] : g.amodal_masks)
    masks[id] = {{"visible", detector::rle_to_json(m.visible)}, {"occluded", detector::rle_to_json(m.occluded)}};
  return {{"schema_version", kSchemaVersion},
          {"building", building},
          {"rooms", rooms},
          {"objects", objects},
          {"cameras", cameras},
          {"edges", edges},
          {"amodal_masks", masks}};
}

SceneGraph from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw Error(ErrorCode::kFormat, "unsupported schema_version");
    SceneGraph g;
    const json& b = j.at("building");
    g.building.id = b.at("id").get<std::string>();
    g.building.function = opt_from<std::string>(b, "function");
    g.building.num_floors = b.at("num_floors").get<int>();
    g.building.area = b.at("area").get<double>();
    g.building.volume = b.at("volume").get<double>();
    g.building.volume_degenerate = b.at("volume_degenerate").get<bool>();
    g.building.size = vec_from(b.at("size"));
    g.building.reference_center = vec_from(b.at("reference_center"));
    for (const auto& r : j.at("rooms")) {
      RoomNode n;
      n.id = r.at("id").get<std::string>();
      n.scene_category = opt_from<std::string>(r, "scene_category");
      n.location = vec_from(r.at("location"));
      n.floor_area = r.at("floor_area").get<double>();
      n.floor_elevation = r.at("floor_elevation").get<double>();
      n.size = vec_from(r.at("size"));
      n.volume = r.at("volume").get<double>();
      n.volume_degenerate = r.at("volume_degenerate").get<bool>();
      n.face_ids = r.at("face_ids").get<std::vector<int>>();
      n.voxel_occupancy = voxels_from_json(r.at("voxel_occupancy"));
      g.rooms.push_back(std::move(n));
    }
    for (const auto& o : j.at("objects")) {
      ObjectNode n;
      n.id = o.at("id").get<int>();
      n.class_id = o.at("class_id").get<int>();
      n.class_name = o.at("class_name").get<std::string>();
      n.confidence = o.at("confidence").get<double>();
      n.location = vec_from(o.at("location"));
      n.size = vec_from(o.at("size"));
      n.volume = o.at("volume").get<double>();
      n.volume_degenerate = o.at("volume_degenerate").get<bool>();
      n.floor_area = o.at("floor_area").get<double>();
      n.face_ids = o.at("face_ids").get<std::vector<int>>();
      n.voxel_occupancy = voxels_from_json(o.at("voxel_occupancy"));
      n.material = opt_from<std::vector<std::string>>(o, "material");
      n.texture = opt_from<std::vector<std::string>>(o, "texture");
      n.action_affordance = opt_from<std::vector<std::string>>(o, "action_affordance");
      n.parent_room = opt_from<std::string>(o, "parent_room");
      n.unassigned_geometry = o.at("unassigned_geometry").get<bool>();
      g.objects.push_back(std::move(n));
    }
    for (const auto& c : j.at("cameras")) {
      CameraNode n;
      n.id = c.at("id").get<std::string>();
      n.pose.position = vec_from(c.at("pose").at("position"));
      const auto q = c.at("pose").at("quaternion").get<std::array<double, 4>>();
      n.pose.rotation = Quat(q[0], q[1], q[2], q[3]);
      n.fov = c.at("fov").get<double>();
      n.modality = c.at("modality").get<std::string>();
      const auto res = c.at("resolution").get<std::array<int, 2>>();
      n.width = res[0];
      n.height = res[1];
      n.parent_room = opt_from<std::string>(c, "parent_room");
      g.cameras.push_back(std::move(n));
    }
    for (const auto& e : j.at("edges")) {
      Edge n;
      n.kind = edge_kind_from_string(e.at("kind").get<std::string>());
      n.endpoints = e.at("endpoints").get<std::vector<std::string>>();
      n.payload = e.at("payload");
      g.edges.push_back(std::move(n));
    }
    for (const auto& [id, m] : j.at("amodal_masks").items())
      g.amodal_masks[id] = AmodalMask{detector::rle_from_json(m.at("visible")), detector::rle_from_json(m.at("occluded"))};
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("graph JSON: ") + e.what());
  }
}

std::vector<std::string> validate_graph_json(const json& j) {
  std::vector<std::string> problems;
  auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };
  if (!j.is_object()) return {"document is not an object"};
  if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion) fail("schema_version must be 1");
  for (const char* key : {"building", "rooms", "objects", "cameras", "edges", "amodal_masks"})
    if (!j.contains(key)) fail(std::string("missing ") + key);
  if (!problems.empty()) return problems;

  std::set<std::string> nodes;
  const json& b = j["building"];
  for (const char* key : {"id", "num_floors", "area", "volume", "size", "reference_center"})
    if (!b.contains(key)) fail(std::string("building missing ") + key);
  if (b.contains("id") && b["id"].is_string()) nodes.insert(building_ref(b["id"].get<std::string>()));
  if (b.contains("volume") && b["volume"].is_number() && b["volume"].get<double>() < 0.0) fail("building volume < 0");

  for (const auto& r : j["rooms"]) {
    if (!r.contains("id") || !r["id"].is_string()) {
      fail("room without id");
      continue;
    }
    const std::string ref = room_ref(r["id"].get<std::string>());
    if (!nodes.insert(ref).second) fail("duplicate node " + ref);
    if (!r.contains("face_ids") || !r["face_ids"].is_array() || r["face_ids"].empty()) fail(ref + " has no faces");
    if (!r.contains("volume") || !r["volume"].is_number() || r["volume"].get<double>() < 0.0)
      fail(ref + " volume missing or negative");
    for (const char* key : {"location", "floor_area", "size", "voxel_occupancy"})
      if (!r.contains(key)) fail(ref + " missing " + key);
  }
  std::set<std::string> unassigned;
  for (const auto& o : j["objects"]) {
    if (!o.contains("id") || !o["id"].is_number_integer()) {
      fail("object without integer id");
      continue;
    }
    const std::string ref = object_ref(o["id"].get<int>());
    if (!nodes.insert(ref).second) fail("duplicate node " + ref);
    if (!o.contains("face_ids") || !o["face_ids"].is_array() || o["face_ids"].empty()) fail(ref + " has no faces");
    for (const char* key : {"class_id", "location", "size", "volume", "floor_area", "voxel_occupancy"})
      if (!o.contains(key)) fail(ref + " missing " + key);
    if (o.value("unassigned_geometry", false) && o.value("parent_room", json()).is_null()) unassigned.insert(ref);
  }
  for (const auto& c : j["cameras"]) {
    if (!c.contains("id") || !c["id"].is_string()) {
      fail("camera without id");
      continue;
    }
    const std::string ref = camera_ref(c["id"].get<std::string>());
    if (!nodes.insert(ref).second) fail("duplicate node " + ref);
    const std::string modality = c.value("modality", "");
    const double fov = c.value("fov", 0.0);
    if (modality == "panoramic" ? fov != 360.0 : !(fov > 0.0 && fov < 180.0)) fail(ref + " has an invalid fov");
    if (!c.contains("pose") || !c.contains("resolution")) fail(ref + " missing pose or resolution");
  }

  std::set<std::string> edge_ids, parented;
  for (const auto& e : j["edges"]) {
    const std::string id = e.value("id", "");
    EdgeKind kind;
    try {
      kind = edge_kind_from_string(e.value("kind", ""));
    } catch (const Error&) {
      fail("edge " + id + " has an unknown kind");
      continue;
    }
    if (!e.contains("endpoints") || !e["endpoints"].is_array()) {
      fail("edge " + id + " has no endpoints");
      continue;
    }
    Edge parsed{kind, {}, {}};
    for (const auto& p : e["endpoints"]) parsed.endpoints.push_back(p.is_string() ? p.get<std::string>() : "");
    if (parsed.id() != id) fail("edge id " + id + " does not match its kind and endpoints");
    if (!edge_ids.insert(id).second) fail("duplicate edge " + id);
    const auto layers = arity(kind);
    if (parsed.endpoints.size() != layers.size()) {
      fail("edge " + id + " has the wrong arity");
      continue;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string& ep = parsed.endpoints[i];
      if (ep.substr(0, ep.find(':')) != layers[i]) fail("edge " + id + " endpoint " + ep + " has the wrong layer");
      if (!nodes.count(ep)) fail("edge " + id + " references missing node " + ep);
    }
    if (const std::string why = check_payload(kind, e.value("payload", json())); !why.empty())
      fail("edge " + id + ": " + why);
    if (kind == EdgeKind::kParentSpace) parented.insert(parsed.endpoints[0]);
    if (kind == EdgeKind::kAmodalMask) {
      const json& p = e["payload"];
      if (p.contains("mask") && p["mask"].is_string() && !j["amodal_masks"].contains(p["mask"].get<std::string>()))
        fail("edge " + id + " references a missing amodal mask");
    }
  }
  for (const auto& o : j["objects"]) {
    if (!o.contains("id") || !o["id"].is_number_integer()) continue;
    const std::string ref = object_ref(o["id"].get<int>());
    if (!parented.count(ref) && !unassigned.count(ref)) fail(ref + " has no parent room and no unassigned flag");
  }
  for (const auto& [id, m] : j["amodal_masks"].items()) {
    if (!edge_ids.count(id)) fail("amodal mask " + id + " has no edge");
    try {
      (void)rle_decode(detector::rle_from_json(m.at("visible")));
      (void)rle_decode(detector::rle_from_json(m.at("occluded")));
    } catch (const std::exception& ex) {
      fail("amodal mask " + id + ": " + ex.what());
    }
  }
  return problems;
}

json graph_summary(const SceneGraph& g) {
  json kinds = json::object();
  for (const auto& e : g.edges) {
    auto& slot = kinds[std::string(to_string(e.kind))];
    slot = slot.is_null() ? 1 : slot.get<int>() + 1;
  }
  json classes = json::object();
  for (const auto& o : g.objects) {
    auto& slot = classes[o.class_name];
    slot = slot.is_null() ? 1 : slot.get<int>() + 1;
  }
  return {{"schema_version", kSchemaVersion},
          {"building", g.building.id},
          {"rooms", g.rooms.size()},
          {"objects", g.objects.size()},
          {"cameras", g.cameras.size()},
          {"edges", g.edges.size()},
          {"edges_by_kind", kinds},
          {"objects_by_class", classes}};
}

}  // namespace sg3d::graph
