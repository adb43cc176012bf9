// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sg3d {

/// Per-pixel (class, instance) assignment at panorama resolution. Class 0 is
/// background; instance 0 is "no instance". `instance_confidence` holds one
/// [0, 1] score per instance id present.
struct LabelMap2D {
  int width = 0;
  int height = 0;
  std::vector<int> class_ids;
  std::vector<int> instance_ids;
  std::map<int, double> instance_confidence;

  LabelMap2D() = default;
  LabelMap2D(int w, int h)
      : width(w), height(h),
        class_ids(static_cast<std::size_t>(w) * h, 0),
        instance_ids(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t size() const { return class_ids.size(); }
  int index(int x, int y) const { return y * width + x; }

  /// Every instance id maps to a single class and implies a nonzero class.
  bool consistent() const;
  /// instance id -> class id for every instance present.
  std::map<int, int> instance_classes() const;

  friend bool operator==(const LabelMap2D&, const LabelMap2D&) = default;
};

/// Writes <stem>_class.png and <stem>_instance.png (16-bit gray) plus a
/// <stem>.json sidecar with instance classes, confidences and class names.
void export_label_map(const std::filesystem::path& stem, const LabelMap2D& labels,
                      const std::vector<std::string>& class_names);
LabelMap2D import_label_map(const std::filesystem::path& stem);

/// Per-face (class, instance) assignment over a mesh; 0 means unlabeled.
struct FaceLabelMap {
  std::vector<int> class_ids;
  std::vector<int> instance_ids;
  std::map<int, double> instance_confidence;

  FaceLabelMap() = default;
  explicit FaceLabelMap(std::size_t num_faces)
      : class_ids(num_faces, 0), instance_ids(num_faces, 0) {}

  std::size_t size() const { return class_ids.size(); }
  bool consistent() const;
  /// Sorted face ids per instance.
  std::map<int, std::vector<int>> instance_faces() const;
  std::map<int, int> instance_classes() const;

  friend bool operator==(const FaceLabelMap&, const FaceLabelMap&) = default;
};

/// Sparse export: {"<face_id>": [class_id, instance_id]}, unlabeled omitted.
nlohmann::json face_labels_to_json(const FaceLabelMap& labels);
FaceLabelMap face_labels_from_json(const nlohmann::json& j, std::size_t num_faces);
/// {"<instance_id>": confidence}
nlohmann::json confidences_to_json(const std::map<int, double>& conf);
std::map<int, double> confidences_from_json(const nlohmann::json& j);

}  // namespace sg3d
