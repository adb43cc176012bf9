// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg3d/detector.hpp"
#include "sg3d/eval.hpp"
#include "sg3d/framing.hpp"
#include "sg3d/graph.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/meshio.hpp"
#include "sg3d/mvc.hpp"
#include "sg3d/synthetic.hpp"
#include "sg3d/verification.hpp"

namespace sg3d::pipeline {

enum class Stage { kIngest = 0, kFraming, kMvc, kGraph, kEval };

std::string_view to_string(Stage stage);
/// Throws kConfig for an unknown stage name.
Stage stage_from_string(std::string_view name);

struct PipelineConfig {
  // File inputs.
  std::filesystem::path mesh;
  std::filesystem::path panos;
  std::filesystem::path poses;
  std::filesystem::path detections;
  std::filesystem::path baseline_detections;  // optional, cube-view detections
  std::filesystem::path rooms;
  std::filesystem::path vocabulary;  // empty = COCO
  std::filesystem::path eval_gt;     // directory with face_labels.json and labels/

  // Synthetic input replaces all file inputs.
  std::optional<std::uint64_t> synthetic_seed;
  synthetic::SceneParams scene;
  synthetic::NoiseParams noise;

  std::filesystem::path out;
  Stage last_stage = Stage::kEval;
  int threads = 1;
  double score_threshold = detector::kDefaultScoreThreshold;
  framing::GridParams grid;
  framing::Connectivity connectivity = framing::Connectivity::kFour;
  mvc::AggregateOptions aggregate;
  graph::GraphOptions graph;
  verification::TaskOptions tasks;
  bool write_label_images = true;
  bool resume = true;
  /// Also run the cube-view baseline and plain projection for the report.
  bool compare_stages = true;

  /// Throws kConfig when inputs are missing or contradictory.
  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Everything the stages read.
struct Inputs {
  TriMesh mesh;
  int dropped_degenerate = 0;
  std::vector<meshio::RoomAnnotation> rooms;
  std::vector<meshio::Panorama> panoramas;  // sorted by id
  detector::ClassVocabulary vocabulary = detector::ClassVocabulary::coco();
  std::vector<detector::DetectionRecord> detections;
  std::vector<detector::DetectionRecord> baseline_detections;
  int filtered_detections = 0;
  std::vector<std::string> warnings;

  std::optional<synthetic::SyntheticScene> synthetic;
  std::vector<synthetic::PanoramaTruth> truth;
};

/// Loads (or generates) the scene. Synthetic panoramas carry their rendered
/// pixels; detections are produced later, per stage.
Inputs load_inputs(const PipelineConfig& config);

struct StageLabels {
  std::string stage;
  std::map<std::string, LabelMap2D> panos;  // by panorama id
  FaceLabelMap faces;
};

struct PipelineResult {
  std::vector<StageLabels> stages;  // baseline (optional), framing, framing+mvc
  std::optional<FaceLabelMap> face_labels;
  std::optional<graph::SceneGraph> graph;
  std::vector<eval::EvalReport> reports;  // 2D then 3D
  bool reused = false;
  nlohmann::json manifest;
};

/// ingest -> framing -> mvc -> graph -> eval, stopping after
/// config.last_stage. Artifacts go to a sibling temp directory that replaces
/// config.out on success and is removed on failure. Failures surface as
/// kStage errors naming the stage. With resume, an existing output whose
/// manifest records the same input hash and stage is reused as is.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Content hash of the config (minus output and threading) and every input
/// file, as 16 hex digits.
std::string input_hash(const PipelineConfig& config);

/// Ground truth for evaluation, per panorama and per face.
struct GroundTruth {
  std::map<std::string, LabelMap2D> panos;
  FaceLabelMap faces;
};
std::optional<GroundTruth> load_ground_truth(const PipelineConfig& config, const Inputs& inputs);

/// Writes `text` to `path` through a temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

/// A finished run directory opened for review and answer application.
class Workspace {
 public:
  static Workspace open(const std::filesystem::path& run_dir, int threads = 1);

  const std::filesystem::path& dir() const { return dir_; }
  const PipelineConfig& config() const { return config_; }
  const Inputs& inputs() const { return inputs_; }
  const graph::SceneGraph& graph() const { return graph_; }
  const FaceLabelMap& labels() const { return labels_; }
  verification::Session& session() { return session_; }
  const verification::Session& session() const { return session_; }

  /// Current labels of one panorama, from the face labels.
  LabelMap2D pano_labels(const std::string& pano_id) const;
  /// RGB render of a task's view.
  RgbImage render(const verification::Task& task) const;

  verification::ApplyReport apply();
  /// graph.json, face_labels.json, confidences.json and tasks.json.
  void save() const;
  void save_tasks() const;

 private:
  Workspace() = default;
  graph::GraphInputs graph_inputs() const;

  std::filesystem::path dir_;
  PipelineConfig config_;
  Inputs inputs_;
  geometry::Bvh bvh_;
  std::vector<graph::CameraNode> cameras_;
  graph::SceneGraph graph_;
  FaceLabelMap labels_;
  verification::Session session_;
  std::map<std::string, mvc::PanoramaHits> hits_;
};

}  // namespace sg3d::pipeline
