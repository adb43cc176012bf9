// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sg3d/geometry/bvh.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/mesh.hpp"
#include "sg3d/meshio.hpp"

namespace sg3d::mvc {

/// Cameras closer than this to a face center are treated as this far.
inline constexpr double kMinFaceDistance = 0.01;

/// First-hit face of every panorama pixel center ray (-1 on a miss).
struct PanoramaHits {
  std::string pano_id;
  int width = 0;
  int height = 0;
  std::vector<int> face;
};

PanoramaHits cast_panorama(const meshio::Panorama& pano, const geometry::Bvh& bvh, int threads = 1);

/// Merged votes of one panorama instance (group) on one face.
struct FaceVote {
  int face_id = 0;
  int class_id = 0;
  int group_id = 0;  // instance id in the source panorama
  int pixels = 0;
  double weight = 0.0;  // pixels / max(|P - F_c|, kMinFaceDistance)

  friend bool operator==(const FaceVote&, const FaceVote&) = default;
};

struct PanoramaVotes {
  std::string pano_id;
  std::vector<FaceVote> votes;  // sorted by (face, group)
  /// (face, pixels, weight) over every ray that hits the face, labeled or not.
  struct Observation {
    int face_id;
    int pixels;
    double weight;
    friend bool operator==(const Observation&, const Observation&) = default;
  };
  std::vector<Observation> observed;  // sorted by face
};

/// Votes cast by every labeled pixel of `labels` onto its first-hit face.
PanoramaVotes project_labels_to_faces(const LabelMap2D& labels, const meshio::Panorama& pano,
                                      const PanoramaHits& hits, const TriMesh& mesh);
PanoramaVotes project_labels_to_faces(const LabelMap2D& labels, const meshio::Panorama& pano,
                                      const geometry::Bvh& bvh, const TriMesh& mesh);

/// Face classes plus, per face, the share of its observation weight that
/// supports the assigned class (used for instance confidences).
struct FaceAggregate {
  FaceLabelMap labels;  // classes only
  std::vector<double> support;
};

struct AggregateOptions {
  bool fill_holes = false;
};

/// Two-stage weighted voting. Stage 1 picks the heaviest class per face;
/// stage 2 gives every group (one panorama instance) the most common stage-1
/// class over its faces, heavier groups first, first writer wins per face.
/// Panoramas are processed in id order whatever the input order.
FaceAggregate aggregate_face_labels(std::vector<PanoramaVotes> votes, const TriMesh& mesh,
                                    const AggregateOptions& options = {});

/// Plain projection without consistency weighting: every panorama votes
/// once per face for its majority class there (pixel count, lower class on
/// ties), and faces take the majority over panoramas (lower class on ties).
FaceAggregate project_without_consistency(std::vector<PanoramaVotes> votes, const TriMesh& mesh);

/// Connected components over edge-adjacent faces of equal class. Instances
/// are numbered by descending surface area, ties by lowest face id.
FaceLabelMap extract_instances_3d(const FaceLabelMap& class_map, const TriMesh& mesh,
                                  const MeshAdjacency& adjacency);

/// Instance confidence = area-weighted mean support over its faces.
void score_instances_3d(FaceLabelMap& labels, const std::vector<double>& support, const TriMesh& mesh);

/// Each pixel takes (class, instance) of its first-hit face.
LabelMap2D backproject_to_pano(const FaceLabelMap& labels, const PanoramaHits& hits);
LabelMap2D backproject_to_pano(const FaceLabelMap& labels, const meshio::Panorama& pano,
                               const geometry::Bvh& bvh);

}  // namespace sg3d::mvc
