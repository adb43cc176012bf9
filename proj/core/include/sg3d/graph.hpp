// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg3d/detector.hpp"
#include "sg3d/geometry/bvh.hpp"
#include "sg3d/geometry/voxel.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/mask.hpp"
#include "sg3d/meshio.hpp"

namespace sg3d::graph {

inline constexpr int kSchemaVersion = 1;

struct BuildingNode {
  std::string id = "building";
  std::optional<std::string> function;
  int num_floors = 0;
  double area = 0.0;
  double volume = 0.0;
  bool volume_degenerate = false;
  Vec3 size = Vec3::Zero();
  Vec3 reference_center = Vec3::Zero();
};

struct RoomNode {
  std::string id;
  std::optional<std::string> scene_category;
  Vec3 location = Vec3::Zero();  // area-weighted centroid of floor faces
  double floor_area = 0.0;
  double floor_elevation = 0.0;
  Vec3 size = Vec3::Zero();
  double volume = 0.0;
  bool volume_degenerate = false;
  std::vector<int> face_ids;
  geometry::VoxelGrid voxel_occupancy;
};

struct ObjectNode {
  int id = 0;  // the 3D instance id
  int class_id = 0;
  std::string class_name;
  double confidence = 0.0;
  Vec3 location = Vec3::Zero();  // area-weighted mean of face centroids
  Vec3 size = Vec3::Zero();
  double volume = 0.0;
  bool volume_degenerate = false;
  double floor_area = 0.0;
  std::vector<int> face_ids;
  geometry::VoxelGrid voxel_occupancy;
  std::optional<std::vector<std::string>> material;
  std::optional<std::vector<std::string>> texture;
  std::optional<std::vector<std::string>> action_affordance;
  std::optional<std::string> parent_room;
  bool unassigned_geometry = false;
};

struct CameraNode {
  std::string id;
  Pose pose;
  double fov = 360.0;  // 360 marks a panoramic camera
  std::string modality = "panoramic";
  int width = 0;
  int height = 0;
  std::optional<std::string> parent_room;

  bool panoramic() const { return modality == "panoramic"; }
};

CameraNode camera_from_panorama(const meshio::Panorama& pano);

enum class EdgeKind {
  kParentSpace,            // (O, R)
  kParentBuilding,         // (R, B)
  kParentSpaceCam,         // (C, R)
  kSameParentRoom,         // (O, O, R)
  kSpatialOrder,           // (O, O, C)
  kSpatialOrderRoom,       // (R, R, C)
  kRelativeMagnitude,      // (O, O)
  kRelativeMagnitudeRoom,  // (R, R)
  kOcclusion,              // (O, O, C)
  kAmodalMask,             // (O, C)
};

std::string_view to_string(EdgeKind kind);
/// Throws kFormat for an unknown name.
EdgeKind edge_kind_from_string(std::string_view name);

std::string object_ref(int id);
std::string room_ref(const std::string& id);
std::string camera_ref(const std::string& id);
std::string building_ref(const std::string& id);

struct Edge {
  EdgeKind kind = EdgeKind::kParentSpace;
  std::vector<std::string> endpoints;
  nlohmann::json payload = nlohmann::json::object();

  /// "<kind>:<endpoint>,<endpoint>,..."; unique within a graph.
  std::string id() const;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Amodal trimap stored as two COCO RLE layers.
struct AmodalMask {
  Rle visible;
  Rle occluded;
  friend bool operator==(const AmodalMask&, const AmodalMask&) = default;
};

struct SceneGraph {
  BuildingNode building;
  std::vector<RoomNode> rooms;      // sorted by id
  std::vector<ObjectNode> objects;  // sorted by id
  std::vector<CameraNode> cameras;  // sorted by id
  std::vector<Edge> edges;          // sorted by id
  std::map<std::string, AmodalMask> amodal_masks;  // keyed by amodal edge id

  const ObjectNode* find_object(int id) const;
};

// --- attributes -----------------------------------------------------------

/// One node per 3D instance. Volume comes from the convex hull of the
/// instance's vertices; floor area from the hull of their z-projection.
std::vector<ObjectNode> build_objects(const FaceLabelMap& labels, const TriMesh& mesh,
                                      const detector::ClassVocabulary& vocabulary, double voxel_cell);
ObjectNode build_object(int id, int class_id, std::vector<int> faces, const TriMesh& mesh,
                        const detector::ClassVocabulary& vocabulary, double voxel_cell);

std::vector<RoomNode> build_rooms(const std::vector<meshio::RoomAnnotation>& rooms, const TriMesh& mesh,
                                  double voxel_cell);
BuildingNode build_building(const std::vector<RoomNode>& rooms, const TriMesh& mesh);

/// Parent room by majority face area; objects overlapping no room go to the
/// room with the nearest location and are flagged. Sets parent_room and
/// returns the parent_space edges.
std::vector<Edge> assign_parent_rooms(std::vector<ObjectNode>& objects, const std::vector<RoomNode>& rooms,
                                      const TriMesh& mesh);

// --- relationships --------------------------------------------------------

enum class Trimap : std::uint8_t { kEmpty = 0, kVisible = 1, kOccluded = 2 };

/// Per-pixel trimap of one object seen from a camera at width x height
/// (equirectangular for panoramic cameras, pinhole otherwise).
std::vector<Trimap> amodal_mask(const ObjectNode& object, const CameraNode& camera, const TriMesh& mesh,
                                const geometry::Bvh& bvh, int width, int height);

/// Ray direction (world frame) through pixel (u, v) of a camera raster.
Vec3 camera_ray(const CameraNode& camera, int u, int v, int width, int height);

/// True when the camera position lies inside the convex hull of the object.
bool camera_inside_object(const ObjectNode& object, const CameraNode& camera, const TriMesh& mesh);

struct OcclusionPayload {
  std::optional<int> occluder;  // object id
  double a_occludes_b = 0.0;    // share of B's amodal pixels whose first hit is A
  double b_occludes_a = 0.0;
};

enum class Lateral { kLeft, kRight, kAmbiguous };
enum class Depth { kFront, kBehind, kAmbiguous };
struct SpatialOrder {
  Lateral lateral = Lateral::kAmbiguous;  // A relative to B
  Depth depth = Depth::kAmbiguous;
};

/// Centroids in the camera frame. Panoramic cameras look toward the
/// horizontal midpoint of the pair, so every pair gets a frontal view.
SpatialOrder spatial_order(const Vec3& a, const Vec3& b, const CameraNode& camera);

/// vol(A) / vol(B); throws kUndefinedRatio when vol(B) is zero.
double relative_magnitude(double volume_a, double volume_b);

/// First-hit object per pixel plus every object's trimap pixels for one
/// camera. Objects are identified by their instance id in `face_object`.
struct CameraRaster {
  int width = 0;
  int height = 0;
  std::vector<int> first_object;  // 0 = structure / miss
  std::map<int, std::vector<std::pair<int, Trimap>>> amodal;  // object -> (pixel, state), pixel ascending
};

CameraRaster rasterize_camera(const CameraNode& camera, const std::vector<int>& face_object, const TriMesh& mesh,
                              const geometry::Bvh& bvh, int width, int height, int threads = 1);

OcclusionPayload occlusion_relationship(int a, int b, const CameraRaster& raster);

// --- assembly --------------------------------------------------------------

struct GraphOptions {
  double voxel_cell = 0.1;
  int amodal_width = 256;  // panoramic amodal raster, height = width / 2
  /// Emit occlusion and spatial_order for every object pair and camera, not
  /// just pairs sharing a room or overlapping in the camera's amodal masks.
  bool all_pairs = false;
  int threads = 1;
  std::optional<std::string> building_function;
};

struct GraphInputs {
  const TriMesh& mesh;
  const geometry::Bvh& bvh;
  const std::vector<meshio::RoomAnnotation>& rooms;
  const std::vector<CameraNode>& cameras;
  const detector::ClassVocabulary& vocabulary;
};

/// Full construction from face labels.
SceneGraph build_scene_graph(const FaceLabelMap& labels, const GraphInputs& inputs, const GraphOptions& options);

/// Emits every edge kind under the emission policy for already-built nodes.
void finalize_graph(SceneGraph& graph, const FaceLabelMap& labels, const GraphInputs& inputs,
                    const GraphOptions& options);

/// Rebuilds the listed objects (and their incident edges) from `labels`,
/// leaving every other node and edge untouched. Objects whose instance no
/// longer exists are removed. Equals build_scene_graph on the same labels.
void update_objects(SceneGraph& graph, const FaceLabelMap& labels, const std::set<int>& object_ids,
                    const GraphInputs& inputs, const GraphOptions& options);

// --- serialization (graph_json.cpp) ---------------------------------------

nlohmann::json to_json(const SceneGraph& graph);
SceneGraph from_json(const nlohmann::json& j);
/// Structural checks: schema version, required fields, edge kinds and
/// arities, endpoint existence, payload fields, unique edge ids, amodal mask
/// references. Returns the list of problems (empty when valid).
std::vector<std::string> validate_graph_json(const nlohmann::json& j);

nlohmann::json voxels_to_json(const geometry::VoxelGrid& grid);
geometry::VoxelGrid voxels_from_json(const nlohmann::json& j);

/// Short human-readable overview (counts per node layer and edge kind).
nlohmann::json graph_summary(const SceneGraph& graph);

}  // namespace sg3d::graph
