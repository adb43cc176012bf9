// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg3d/geometry/projection.hpp"
#include "sg3d/graph.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/mask.hpp"
#include "sg3d/meshio.hpp"
#include "sg3d/mvc.hpp"

namespace sg3d::verification {

enum class TaskKind { kVerifyLabel, kVerifyMask, kDrawMask, kFindMissing };
/// pending -> resolved | flagged | skipped; flagged -> resolved when a
/// further review breaks the tie.
enum class TaskStatus { kPending, kResolved, kFlagged, kSkipped };

std::string_view to_string(TaskKind kind);
std::string_view to_string(TaskStatus status);
TaskKind task_kind_from_string(std::string_view name);
TaskStatus task_status_from_string(std::string_view name);

/// A square rectilinear render of one panorama.
struct TaskView {
  std::string camera_id;
  double yaw = 0.0;
  double pitch = 0.0;
  double fov = 90.0;
  int size = 512;

  geometry::RectCamera camera() const;
  friend bool operator==(const TaskView&, const TaskView&) = default;
};

struct Answer {
  std::string reviewer;
  nlohmann::json payload;
};

struct Task {
  std::string id;
  TaskKind kind = TaskKind::kVerifyLabel;
  std::optional<int> object_id;  // verify/draw tasks
  int class_id = 0;              // object class, or the class searched for
  TaskView view;
  TaskStatus status = TaskStatus::kPending;
  std::vector<Answer> answers;
  std::optional<nlohmann::json> resolution;
  bool applied = false;
};

struct TaskOptions {
  std::vector<int> missing_classes;  // classes swept by find_missing tasks
  int render_size = 512;
  double context_margin = 0.2;
  int reviewers = 2;                 // independent answers needed per task
  double polygon_agreement_iou = 0.5;
};

nlohmann::json task_options_to_json(const TaskOptions& o);
TaskOptions task_options_from_json(const nlohmann::json& j);

/// Crop framing the object in the camera where it shows the most visible
/// pixels (lowest camera id on ties), widened by the context margin.
TaskView object_view(const graph::SceneGraph& graph, const graph::ObjectNode& object, const TaskOptions& options);

/// verify_label per object (object id order), then per panorama (id order)
/// and requested class, five find_missing views 72 degrees apart. Mask and
/// redraw tasks appear later, once their parent task resolves.
std::vector<Task> make_verification_tasks(const graph::SceneGraph& graph, const std::vector<meshio::Panorama>& panoramas,
                                          const TaskOptions& options);

using Polygon = std::vector<Vec2>;

/// Even-odd fill of pixel centers. Scanline implementation.
BinaryMask rasterize_polygon(const Polygon& polygon, int width, int height);
/// True when two non-adjacent edges cross.
bool self_intersecting(const Polygon& polygon);
Polygon polygon_from_json(const nlohmann::json& j);

enum class SubmitStatus { kRecorded, kResolved, kFlagged, kDuplicate, kClosed, kNotFound, kInvalid };
std::string_view to_string(SubmitStatus status);

struct SubmitResult {
  SubmitStatus status = SubmitStatus::kRecorded;
  std::string message;
};

/// Task list plus review state.
class Session {
 public:
  Session() = default;
  Session(std::vector<Task> tasks, TaskOptions options) : tasks_(std::move(tasks)), options_(std::move(options)) {}

  const std::vector<Task>& tasks() const { return tasks_; }
  const TaskOptions& options() const { return options_; }
  const Task* find(const std::string& id) const;

  /// First open task (pending or flagged) the reviewer has not answered.
  const Task* next_for(const std::string& reviewer) const;

  /// Validates and records one answer. Once enough reviewers agree the task
  /// resolves (and may spawn a follow-up task); disagreement flags it.
  SubmitResult submit(const std::string& task_id, const std::string& reviewer, const nlohmann::json& payload);

  /// Resolved tasks whose outcome has not been applied yet, in task order.
  std::vector<Task*> unapplied();

  nlohmann::json to_json() const;
  static Session from_json(const nlohmann::json& j);

 private:
  Task* find_mutable(const std::string& id);
  void resolve(Task& task, const nlohmann::json& payload);

  std::vector<Task> tasks_;
  TaskOptions options_;
};

/// Payload agreement between two reviewers (polygons by mask IoU).
bool answers_agree(TaskKind kind, const nlohmann::json& a, const nlohmann::json& b, int size, double min_iou);

/// Mesh faces selected by a panorama pixel set: faces with at least half of
/// their observed pixels inside the set.
std::vector<int> faces_under_mask(const std::vector<char>& pano_pixels, const mvc::PanoramaHits& hits,
                                  std::size_t num_faces);

/// Panorama pixels covered by a crop-space mask.
std::vector<char> crop_mask_to_pano(const BinaryMask& crop, const TaskView& view, int pano_width, int pano_height);

/// Object mask as seen in the task view, from the panorama labels.
BinaryMask task_overlay(const Task& task, const LabelMap2D& pano_labels);

struct ApplyContext {
  const graph::GraphInputs& inputs;
  const graph::GraphOptions& options;
  /// Hits per panorama id, needed for draw_mask and find_missing answers.
  const std::map<std::string, mvc::PanoramaHits>& hits;
};

struct ApplyReport {
  std::set<int> removed;
  std::set<int> updated;
  std::set<int> created;
  int tasks_applied = 0;

  nlohmann::json to_json() const;
};

/// Applies every resolved, not yet applied task in task order to the face
/// labels, then updates the graph for the touched objects only.
ApplyReport apply_verification(Session& session, graph::SceneGraph& graph, FaceLabelMap& labels,
                               const ApplyContext& context);

}  // namespace sg3d::verification
