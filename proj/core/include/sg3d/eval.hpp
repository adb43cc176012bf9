// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg3d/labels.hpp"
#include "sg3d/mask.hpp"

namespace sg3d::eval {

/// An instance as a sorted set of element ids (panorama pixels or mesh
/// faces) inside one evaluation image.
struct Instance {
  int image = 0;
  int class_id = 0;
  double score = 1.0;
  std::vector<int> elements;  // sorted, unique
};

/// Throws kDimensionMismatch for masks of different frame sizes.
double iou_2d(const BinaryMask& a, const BinaryMask& b);
/// Area-weighted IoU of two face sets (sorted or not) over one mesh.
double iou_3d(std::span<const int> a, std::span<const int> b, std::span<const double> face_areas);

struct Metrics {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ar = 0.0;
};

struct EvalParams {
  int max_detections = 100;  // per image
};

/// COCO-protocol matching and scoring. `element_weights[image]` gives
/// per-element weights for area-weighted IoU; images without an entry (or
/// an empty vector) weigh every element 1. Categories without ground truth
/// are ignored.
Metrics evaluate(const std::vector<Instance>& predictions, const std::vector<Instance>& ground_truth,
                 const std::vector<std::vector<double>>& element_weights = {}, const EvalParams& params = {});

/// Instances of a label map; scores come from instance_confidence (1 if
/// missing).
std::vector<Instance> instances_from_labels(const LabelMap2D& labels, int image);
std::vector<Instance> instances_from_faces(const FaceLabelMap& labels, int image);

struct StageRow {
  std::string stage;
  Metrics metrics;
  std::optional<Metrics> delta;  // against the first row
};

struct EvalReport {
  std::string modality;  // "2D" or "3D"
  std::vector<StageRow> rows;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct StagePredictions {
  std::string stage;
  std::vector<Instance> predictions;
};

/// One row per stage; every row after the first carries absolute deltas
/// against the first. A single stage has no deltas.
EvalReport compare_stages(const std::vector<StagePredictions>& stages, const std::vector<Instance>& ground_truth,
                          const std::string& modality,
                          const std::vector<std::vector<double>>& element_weights = {},
                          const EvalParams& params = {});

/// Aligned table with one column group per modality, baseline deltas in
/// parentheses.
std::string format_reports(const std::vector<EvalReport>& reports);

}  // namespace sg3d::eval
