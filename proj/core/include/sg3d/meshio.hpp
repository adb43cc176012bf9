// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sg3d/error.hpp"
#include "sg3d/image.hpp"
#include "sg3d/mesh.hpp"

namespace sg3d::meshio {

struct MeshLoadResult {
  TriMesh mesh;
  int dropped_degenerate = 0;
};

/// Loads OBJ (v/f records; polygons fan-triangulated; v/vt/vn index forms
/// accepted) or binary/ASCII PLY. Degenerate faces (area < 1e-12 m^2) are
/// dropped and counted. Throws kFormat (with line or byte offset) on parse
/// failure and kEmptyGeometry when no faces remain.
MeshLoadResult load_mesh(const std::filesystem::path& path);

void save_obj(const std::filesystem::path& path, const TriMesh& mesh);
/// Binary little-endian PLY; optional per-face RGB colors.
void save_ply(const std::filesystem::path& path, const TriMesh& mesh,
              const std::vector<std::array<std::uint8_t, 3>>* face_colors = nullptr);

struct Panorama {
  std::string id;
  Pose pose;
  int width = 0;
  int height = 0;
  std::filesystem::path image_path;  // empty for in-memory panoramas
  RgbImage image;                    // empty unless loaded

  /// Loads the RGB pixels on demand.
  const RgbImage& pixels();
};

struct EntryError {
  std::string entry;
  ErrorCode code;
  std::string message;
};

struct PanoramaLoadResult {
  std::vector<Panorama> panoramas;  // sorted by id
  std::vector<EntryError> errors;
};

/// Reads `poses.json` ({id: {position:[x,y,z], quaternion:[w,x,y,z],
/// image?: file}}) and resolves each image inside `dir` (`image`, else
/// <id>.png, else <id>.jpg). Only headers are read; pixels load lazily.
/// Bad entries are reported in `errors` and skipped.
PanoramaLoadResult load_panoramas(const std::filesystem::path& dir,
                                  const std::filesystem::path& pose_manifest);

void save_pose_manifest(const std::filesystem::path& path, const std::vector<Panorama>& panoramas);

struct RoomAnnotation {
  std::string room_id;
  std::vector<int> face_ids;  // sorted, unique
  std::optional<std::string> scene_category;
};

/// Reads `[{room_id, scene_category?, face_ids:[...]}]`, validates ids
/// against `num_faces` (kOutOfRange) and pairwise disjointness (kOverlap,
/// naming the first shared face). Rooms come back sorted by room_id.
std::vector<RoomAnnotation> load_rooms(const std::filesystem::path& path, std::size_t num_faces);
std::vector<RoomAnnotation> validate_rooms(std::vector<RoomAnnotation> rooms, std::size_t num_faces);
void save_rooms(const std::filesystem::path& path, const std::vector<RoomAnnotation>& rooms);

}  // namespace sg3d::meshio
