// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sg3d/detector.hpp"
#include "sg3d/geometry/bvh.hpp"
#include "sg3d/geometry/projection.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/meshio.hpp"

namespace sg3d::synthetic {

/// Procedural multi-room building: rooms in a row joined by wide openings,
/// convex boxes and prisms standing on the floor, two panoramas per room.
struct SceneParams {
  int min_rooms = 2;
  int max_rooms = 4;
  int min_objects = 8;
  int max_objects = 20;
  int panos_per_room = 2;
  int pano_width = 768;  // height is width / 2
  double wall_height = 2.7;
  double camera_height_min = 1.3;
  double camera_height_max = 1.5;
  double max_object_height = 1.2;
  /// Minimum horizontal gap between any camera and any object. Keeps every
  /// object below about 50 degrees latitude, where view pixels are finer than
  /// panorama pixels.
  double camera_clearance = 1.3;
  double object_gap = 0.35;
  double surface_step = 0.5;  // floor/wall/ceiling tessellation
  double object_step = 0.25;  // object side tessellation
  int max_attempts = 200;
  std::vector<int> classes = {57, 58, 59, 60, 61, 62, 63, 72, 73};
};

struct ObjectTruth {
  int id = 0;  // 1-based
  int class_id = 0;
  std::string room_id;
  std::vector<int> face_ids;  // all faces, sorted
  Vec3 center = Vec3::Zero();
  double footprint_radius = 0.0;
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  std::uint64_t accepted_attempt = 0;
  TriMesh mesh;
  std::vector<meshio::RoomAnnotation> rooms;
  std::vector<meshio::Panorama> panoramas;  // sorted by id
  std::vector<ObjectTruth> objects;          // id order
  std::vector<int> face_object;              // per face, 0 = structure
  std::vector<int> face_class;
};

/// Ray-cast ground truth of one panorama: per-pixel first-hit face (-1 for
/// misses) and the corresponding object / class labels.
struct PanoramaTruth {
  std::vector<int> hit_face;
  std::vector<int> object_ids;  // 0 = structure or miss
  LabelMap2D labels;            // instance id = object id
  RgbImage image;               // flat-shaded rendering
};

/// Throws kConfig when no acceptable layout is found within max_attempts.
/// Accepted scenes observe every object and the observed faces of every
/// object form one edge-connected patch.
SyntheticScene generate_scene(std::uint64_t seed, const SceneParams& params = {});

PanoramaTruth render_truth(const SyntheticScene& scene, const geometry::Bvh& bvh,
                           std::size_t pano_index);
std::vector<PanoramaTruth> render_all_truth(const SyntheticScene& scene,
                                            const geometry::Bvh& bvh, int threads);

/// Faces hit by at least one panorama pixel ray.
std::vector<char> observed_faces(const SyntheticScene& scene,
                                 const std::vector<PanoramaTruth>& truth);

/// Ground-truth face labels restricted to observed faces; instance id is
/// the object id.
FaceLabelMap truth_face_labels(const SyntheticScene& scene, const std::vector<char>& observed);

/// Noise model of the synthetic detector. Probabilities are per detection
/// unless noted.
struct NoiseParams {
  double drop_prob = 0.05;
  double truncated_drop_prob = 0.3;  // extra, for masks touching the frame border
  int morph_radius = 2;              // uniform in [-r, r] view pixels, per (panorama, object)
  double truncated_confusion_prob = 0.4;
  double false_positive_prob = 0.4;  // duplicate with a confused class, truncated only
  double false_positive_score_factor = 0.85;
  /// Per (panorama, object): every detection of the object from that
  /// panorama carries the same wrong class. Ramps linearly from 0 at
  /// confusion_near_m to this value at confusion_far_m.
  double consistent_confusion_prob = 0.5;
  double confusion_near_m = 1.5;
  double confusion_far_m = 4.5;
  double score_min = 0.7;
  double score_max = 1.0;
  int min_pixels = 64;

  static NoiseParams zero();
};

/// Detections are computed from the panorama-resolution truth map, sampled
/// at each view pixel center (nearest), so zero noise reproduces the truth
/// exactly. Thread-safe.
class SyntheticDetector {
 public:
  SyntheticDetector(const SyntheticScene& scene, const std::vector<PanoramaTruth>& truth,
                    NoiseParams noise, std::uint64_t seed);

  std::vector<detector::DetectionRecord> detect(std::size_t pano_index,
                                                const geometry::RectCamera& cam) const;

  const NoiseParams& noise() const { return noise_; }

 private:
  struct Table {
    std::vector<int> u;  // panorama column at zero yaw offset, -1 when unused
    std::vector<int> v;
  };
  std::shared_ptr<const Table> table(const geometry::RectCamera& cam, double residual_yaw) const;
  int confused_class(int true_class, std::uint64_t key) const;

  const SyntheticScene& scene_;
  const std::vector<PanoramaTruth>& truth_;
  NoiseParams noise_;
  std::uint64_t seed_;
  std::vector<int> classes_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::tuple<int, int, double, double, double>, std::shared_ptr<const Table>> cache_;
};

/// Convenience wrapper for one-off calls.
std::vector<detector::DetectionRecord> synthetic_detect(const SyntheticScene& scene,
                                                        const std::vector<PanoramaTruth>& truth,
                                                        std::size_t pano_index,
                                                        const geometry::RectCamera& cam,
                                                        const NoiseParams& noise,
                                                        std::uint64_t seed);

}  // namespace sg3d::synthetic
