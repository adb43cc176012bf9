// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg3d/error.hpp"
#include "sg3d/mask.hpp"

namespace sg3d::detector {

/// Class-name table. Id 0 is reserved for background; object classes are
/// 1..size()-1 and names are unique.
class ClassVocabulary {
 public:
  explicit ClassVocabulary(std::vector<std::string> names);
  /// Background + the 80 COCO "thing" categories in their usual order.
  static ClassVocabulary coco();
  /// JSON array of names (index = id; element 0 must be "background").
  static ClassVocabulary load(const std::filesystem::path& path);

  std::size_t size() const { return names_.size(); }
  bool valid_object_class(int id) const { return id > 0 && id < static_cast<int>(names_.size()); }
  const std::string& name(int id) const;
  std::optional<int> id(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

/// A rectilinear view of one panorama, encoded in detection files as
/// "<pano_id>@<yaw>,<pitch>,<fov>" with degrees printed in %g form.
struct ViewKey {
  std::string pano_id;
  double yaw = 0.0;
  double pitch = 0.0;
  double fov = 0.0;

  std::string to_string() const;
  /// Throws kFormat on malformed ids.
  static ViewKey parse(const std::string& view_id);
};

struct DetectionRecord {
  std::string view_id;
  int class_id = 0;
  double score = 0.0;
  BinaryMask mask;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

inline constexpr double kDefaultScoreThreshold = 0.7;

struct RecordError {
  int line = 0;
  ErrorCode code;
  std::string message;
};

struct DetectionLoadResult {
  std::vector<DetectionRecord> records;
  int filtered = 0;  // dropped by the score threshold
  std::vector<RecordError> errors;
};

/// Reads detections JSONL: one {view_id, class_id, score,
/// rle:{counts:[...], size:[h, w]}} object per line. Records scoring below
/// `threshold` are dropped and counted; invalid records are reported per line.
DetectionLoadResult load_detections(const std::filesystem::path& path,
                                    const ClassVocabulary& vocabulary,
                                    double threshold = kDefaultScoreThreshold);
DetectionLoadResult parse_detections(std::istream& in, const ClassVocabulary& vocabulary,
                                     double threshold = kDefaultScoreThreshold);

nlohmann::json rle_to_json(const Rle& rle);
Rle rle_from_json(const nlohmann::json& j);
nlohmann::json detection_to_json(const DetectionRecord& d);
void save_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& records);

/// Keeps records with score >= threshold; returns the number removed.
int filter_by_score(std::vector<DetectionRecord>& records, double threshold);

}  // namespace sg3d::detector
