// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sg3d/error.hpp"

namespace sg3d::verification {

namespace {

using nlohmann::json;

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kMinCropFov = 30.0;
constexpr double kMaxCropFov = 120.0;
constexpr int kMissingViews = 5;
constexpr double kMissingYawStep = 72.0;
constexpr double kMissingFov = 90.0;

std::string object_task_id(int object, const char* suffix) { return "obj" + std::to_string(object) + "/" + suffix; }

bool valid_point(const json& p) {
  return p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number() &&
         std::isfinite(p[0].get<double>()) && std::isfinite(p[1].get<double>());
}

std::string check_polygon(const json& j) {
  if (!j.is_array() || j.size() < 3) return "polygon needs at least 3 points";
  for (const auto& p : j)
    if (!valid_point(p)) return "polygon points must be [x, y] numbers";
  if (self_intersecting(polygon_from_json(j))) return "polygon is self-intersecting";
  return {};
}

std::string check_payload(TaskKind kind, const json& p) {
  if (!p.is_object()) return "answer must be an object";
  switch (kind) {
    case TaskKind::kVerifyLabel:
      if (!p.contains("correct") || !p["correct"].is_boolean()) return "verify_label needs a boolean 'correct'";
      break;
    case TaskKind::kVerifyMask:
      if (!p.contains("accept") || !p["accept"].is_boolean()) return "verify_mask needs a boolean 'accept'";
      if (p.contains("reason") && !p["reason"].is_string()) return "'reason' must be a string";
      break;
    case TaskKind::kDrawMask:
      if (!p.contains("polygon")) return "draw_mask needs a 'polygon'";
      return check_polygon(p["polygon"]);
    case TaskKind::kFindMissing:
      if (!p.contains("instances") || !p["instances"].is_array()) return "find_missing needs an 'instances' list";
      for (const auto& ins : p["instances"]) {
        if (!ins.is_object() || !ins.contains("polygon")) return "each instance needs a 'polygon'";
        if (auto why = check_polygon(ins["polygon"]); !why.empty()) return why;
      }
      break;
  }
  return {};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  std::size_t inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      inter += a.at(x, y) && b.at(x, y);
      uni += a.at(x, y) || b.at(x, y);
    }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
         p.y() <= std::max(a.y(), b.y());
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) || (d3 == 0 && on_segment(a, b, c)) ||
         (d4 == 0 && on_segment(a, b, d));
}

json view_json(const TaskView& v) {
  return {{"camera_id", v.camera_id}, {"yaw", v.yaw}, {"pitch", v.pitch}, {"fov", v.fov}, {"size", v.size}};
}

TaskView view_from(const json& j) {
  TaskView v;
  v.camera_id = j.at("camera_id").get<std::string>();
  v.yaw = j.at("yaw").get<double>();
  v.pitch = j.at("pitch").get<double>();
  v.fov = j.at("fov").get<double>();
  v.size = j.at("size").get<int>();
  return v;
}

int next_instance_id(const FaceLabelMap& labels, const graph::SceneGraph& graph) {
  int id = 0;
  for (int i : labels.instance_ids) id = std::max(id, i);
  for (const auto& o : graph.objects) id = std::max(id, o.id);
  return id + 1;
}

const mvc::PanoramaHits& hits_for(const ApplyContext& ctx, const std::string& camera) {
  const auto it = ctx.hits.find(camera);
  if (it == ctx.hits.end()) throw Error(ErrorCode::kNotFound, "no ray hits for camera '" + camera + "'");
  return it->second;
}

std::vector<int> selected_faces(const json& polygon, const TaskView& view, const mvc::PanoramaHits& hits,
                                std::size_t num_faces) {
  const BinaryMask crop = rasterize_polygon(polygon_from_json(polygon), view.size, view.size);
  return faces_under_mask(crop_mask_to_pano(crop, view, hits.width, hits.height), hits, num_faces);
}

}  // namespace

// --- names -----------------------------------------------------------------

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kVerifyLabel: return "verify_label";
    case TaskKind::kVerifyMask: return "verify_mask";
    case TaskKind::kDrawMask: return "draw_mask";
    case TaskKind::kFindMissing: return "find_missing";
  }
  return "unknown";
}

std::string_view to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kResolved: return "resolved";
    case TaskStatus::kFlagged: return "flagged";
    case TaskStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

std::string_view to_string(SubmitStatus status) {
  switch (status) {
    case SubmitStatus::kRecorded: return "recorded";
    case SubmitStatus::kResolved: return "resolved";
    case SubmitStatus::kFlagged: return "flagged";
    case SubmitStatus::kDuplicate: return "duplicate";
    case SubmitStatus::kClosed: return "closed";
    case SubmitStatus::kNotFound: return "not_found";
    case SubmitStatus::kInvalid: return "invalid";
  }
  return "unknown";
}

TaskKind task_kind_from_string(std::string_view name) {
  for (auto k : {TaskKind::kVerifyLabel, TaskKind::kVerifyMask, TaskKind::kDrawMask, TaskKind::kFindMissing})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::kFormat, "unknown task kind '" + std::string(name) + "'");
}

TaskStatus task_status_from_string(std::string_view name) {
  for (auto s : {TaskStatus::kPending, TaskStatus::kResolved, TaskStatus::kFlagged, TaskStatus::kSkipped})
    if (to_string(s) == name) return s;
  throw Error(ErrorCode::kFormat, "unknown task status '" + std::string(name) + "'");
}

geometry::RectCamera TaskView::camera() const {
  geometry::RectCamera c;
  c.yaw_deg = yaw;
  c.pitch_deg = pitch;
  c.fov_deg = fov;
  c.width = size;
  c.height = size;
  return c;
}

json task_options_to_json(const TaskOptions& o) {
  return {{"missing_classes", o.missing_classes},
          {"render_size", o.render_size},
          {"context_margin", o.context_margin},
          {"reviewers", o.reviewers},
          {"polygon_agreement_iou", o.polygon_agreement_iou}};
}

TaskOptions task_options_from_json(const json& j) {
  TaskOptions o;
  o.missing_classes = j.value("missing_classes", std::vector<int>{});
  o.render_size = j.value("render_size", o.render_size);
  o.context_margin = j.value("context_margin", o.context_margin);
  o.reviewers = j.value("reviewers", o.reviewers);
  o.polygon_agreement_iou = j.value("polygon_agreement_iou", o.polygon_agreement_iou);
  if (o.reviewers < 1 || o.render_size < 8) throw Error(ErrorCode::kConfig, "invalid verification options");
  return o;
}

// --- task generation -------------------------------------------------------

TaskView object_view(const graph::SceneGraph& g, const graph::ObjectNode& object, const TaskOptions& options) {
  TaskView view;
  view.size = options.render_size;
  const graph::CameraNode* best = nullptr;
  const graph::AmodalMask* best_mask = nullptr;
  std::size_t best_visible = 0, best_amodal = 0;
  for (const auto& cam : g.cameras) {
    if (!cam.panoramic()) continue;
    const graph::Edge probe{graph::EdgeKind::kAmodalMask, {graph::object_ref(object.id), graph::camera_ref(cam.id)}, {}};
    const auto it = g.amodal_masks.find(probe.id());
    std::size_t visible = 0, amodal = 0;
    if (it != g.amodal_masks.end()) {
      visible = rle_decode(it->second.visible).count();
      amodal = visible + rle_decode(it->second.occluded).count();
    }
    if (!best || visible > best_visible || (visible == best_visible && amodal > best_amodal)) {
      best = &cam;
      best_mask = it != g.amodal_masks.end() ? &it->second : nullptr;
      best_visible = visible;
      best_amodal = amodal;
    }
  }
  if (!best) throw Error(ErrorCode::kNotFound, "no panoramic camera to render object " + std::to_string(object.id));
  view.camera_id = best->id;

  // Pixels to frame: visible ones, else the whole amodal footprint.
  std::vector<Vec3> dirs;
  if (best_mask) {
    BinaryMask m = rle_decode(best_mask->visible);
    if (!m.any()) m = rle_decode(best_mask->occluded);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.at(x, y)) dirs.push_back(geometry::pano_pixel_to_dir(x, y, m.width(), m.height()));
  }
  Vec3 center = best->pose.to_camera(object.location);
  if (!dirs.empty()) {
    Vec3 sum = Vec3::Zero();
    for (const auto& d : dirs) sum += d;
    if (sum.norm() > 1e-9) center = sum;
  }
  if (center.norm() < 1e-12) center = Vec3(0.0, 1.0, 0.0);
  center.normalize();
  view.yaw = std::atan2(center.x(), center.y()) * kRadToDeg;
  view.pitch = std::asin(std::clamp(center.z(), -1.0, 1.0)) * kRadToDeg;
  double half = 0.0;
  const double pixel_half = dirs.empty() ? 0.0 : 90.0 / rle_decode(best_mask->visible).height();
  for (const auto& d : dirs) half = std::max(half, std::acos(std::clamp(d.dot(center), -1.0, 1.0)) * kRadToDeg);
  view.fov = std::clamp(2.0 * (half + pixel_half) * (1.0 + options.context_margin), kMinCropFov, kMaxCropFov);
  return view;
}

std::vector<Task> make_verification_tasks(const graph::SceneGraph& graph, const std::vector<meshio::Panorama>& panoramas,
                                          const TaskOptions& options) {
  std::vector<Task> tasks;
  for (const auto& o : graph.objects) {
    Task t;
    t.id = object_task_id(o.id, "label");
    t.kind = TaskKind::kVerifyLabel;
    t.object_id = o.id;
    t.class_id = o.class_id;
    t.view = object_view(graph, o, options);
    tasks.push_back(std::move(t));
  }
  std::vector<std::string> pano_ids;
  for (const auto& p : panoramas) pano_ids.push_back(p.id);
  std::sort(pano_ids.begin(), pano_ids.end());
  std::vector<int> classes = options.missing_classes;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (const auto& pano : pano_ids) {
    for (int c : classes) {
      for (int k = 0; k < kMissingViews; ++k) {
        Task t;
        t.id = "missing/" + pano + "/" + std::to_string(c) + "/" + std::to_string(k);
        t.kind = TaskKind::kFindMissing;
        t.class_id = c;
        double yaw = k * kMissingYawStep;
        if (yaw > 180.0) yaw -= 360.0;
        t.view = TaskView{pano, yaw, 0.0, kMissingFov, options.render_size};
        tasks.push_back(std::move(t));
      }
    }
  }
  return tasks;
}

// --- polygons --------------------------------------------------------------

Polygon polygon_from_json(const json& j) {
  Polygon p;
  for (const auto& pt : j) p.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
  return p;
}

BinaryMask rasterize_polygon(const Polygon& polygon, int width, int height) {
  BinaryMask mask(width, height);
  const std::size_t n = polygon.size();
  if (n < 3) return mask;
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& p = polygon[i];
      const Vec2& q = polygon[(i + 1) % n];
      if ((p.y() > yc) != (q.y() > yc)) xs.push_back(p.x() + (q.x() - p.x()) * (yc - p.y()) / (q.y() - p.y()));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(0, static_cast<int>(std::floor(xs[k] - 0.5)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1])));
      for (int x = x0; x <= x1; ++x) {
        const double xc = x + 0.5;
        if (xc >= xs[k] && xc < xs[k + 1]) mask.set(x, y);
      }
    }
  }
  return mask;
}

bool self_intersecting(const Polygon& p) {
  const std::size_t n = p.size();
  if (n < 4) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n])) return true;
    }
  }
  return false;
}

bool answers_agree(TaskKind kind, const json& a, const json& b, int size, double min_iou) {
  switch (kind) {
    case TaskKind::kVerifyLabel: return a.at("correct") == b.at("correct");
    case TaskKind::kVerifyMask: return a.at("accept") == b.at("accept");
    case TaskKind::kDrawMask:
      return mask_iou(rasterize_polygon(polygon_from_json(a.at("polygon")), size, size),
                      rasterize_polygon(polygon_from_json(b.at("polygon")), size, size)) >= min_iou;
    case TaskKind::kFindMissing: {
      const auto& ia = a.at("instances");
      const auto& ib = b.at("instances");
      if (ia.size() != ib.size()) return false;
      std::vector<BinaryMask> mb;
      for (const auto& x : ib) mb.push_back(rasterize_polygon(polygon_from_json(x.at("polygon")), size, size));
      std::vector<char> used(mb.size(), 0);
      for (const auto& x : ia) {
        const BinaryMask m = rasterize_polygon(polygon_from_json(x.at("polygon")), size, size);
        bool matched = false;
        for (std::size_t k = 0; k < mb.size() && !matched; ++k) {
          if (!used[k] && mask_iou(m, mb[k]) >= min_iou) used[k] = matched = true;
        }
        if (!matched) return false;
      }
      return true;
    }
  }
  return false;
}

// --- session ---------------------------------------------------------------

const Task* Session::find(const std::string& id) const {
  for (const auto& t : tasks_)
    if (t.id == id) return &t;
  return nullptr;
}

Task* Session::find_mutable(const std::string& id) {
  for (auto& t : tasks_)
    if (t.id == id) return &t;
  return nullptr;
}

const Task* Session::next_for(const std::string& reviewer) const {
  for (const auto& t : tasks_) {
    if (t.status != TaskStatus::kPending && t.status != TaskStatus::kFlagged) continue;
    const bool answered =
        std::any_of(t.answers.begin(), t.answers.end(), [&](const Answer& a) { return a.reviewer == reviewer; });
    if (!answered) return &t;
  }
  return nullptr;
}

void Session::resolve(Task& task, const json& payload) {
  task.status = TaskStatus::kResolved;
  task.resolution = payload;
  auto spawn = [&](TaskKind kind, const char* suffix) {
    Task t;
    t.id = object_task_id(*task.object_id, suffix);
    if (find(t.id)) return;
    t.kind = kind;
    t.object_id = task.object_id;
    t.class_id = task.class_id;
    t.view = task.view;
    tasks_.push_back(std::move(t));
  };
  if (task.kind == TaskKind::kVerifyLabel && payload.at("correct").get<bool>()) spawn(TaskKind::kVerifyMask, "mask");
  if (task.kind == TaskKind::kVerifyMask && !payload.at("accept").get<bool>()) spawn(TaskKind::kDrawMask, "draw");
}

SubmitResult Session::submit(const std::string& task_id, const std::string& reviewer, const json& payload) {
  Task* task = find_mutable(task_id);
  if (!task) return {SubmitStatus::kNotFound, "no task '" + task_id + "'"};
  if (task->status == TaskStatus::kResolved || task->status == TaskStatus::kSkipped)
    return {SubmitStatus::kClosed, "task is " + std::string(to_string(task->status))};
  if (reviewer.empty()) return {SubmitStatus::kInvalid, "reviewer name is required"};
  for (const auto& a : task->answers)
    if (a.reviewer == reviewer) return {SubmitStatus::kDuplicate, reviewer + " already answered " + task_id};
  if (auto why = check_payload(task->kind, payload); !why.empty()) return {SubmitStatus::kInvalid, why};
  task->answers.push_back({reviewer, payload});

  const int need = options_.reviewers;
  for (const auto& a : task->answers) {
    int agree = 0;
    for (const auto& b : task->answers)
      agree += answers_agree(task->kind, a.payload, b.payload, task->view.size, options_.polygon_agreement_iou);
    if (agree >= need) {
      const json chosen = a.payload;
      resolve(*task, chosen);
      return {SubmitStatus::kResolved, {}};
    }
  }
  if (static_cast<int>(task->answers.size()) >= need) {
    task->status = TaskStatus::kFlagged;
    return {SubmitStatus::kFlagged, "reviewers disagree; needs another review"};
  }
  return {SubmitStatus::kRecorded, {}};
}

std::vector<Task*> Session::unapplied() {
  std::vector<Task*> out;
  for (auto& t : tasks_)
    if (t.status == TaskStatus::kResolved && !t.applied) out.push_back(&t);
  return out;
}

json Session::to_json() const {
  json tasks = json::array();
  for (const auto& t : tasks_) {
    json answers = json::array();
    for (const auto& a : t.answers) answers.push_back({{"reviewer", a.reviewer}, {"payload", a.payload}});
    tasks.push_back({{"id", t.id},
                     {"kind", to_string(t.kind)},
                     {"object_id", t.object_id ? json(*t.object_id) : json(nullptr)},
                     {"class_id", t.class_id},
                     {"view", view_json(t.view)},
                     {"status", to_string(t.status)},
                     {"answers", answers},
                     {"resolution", t.resolution ? *t.resolution : json(nullptr)},
                     {"applied", t.applied}});
  }
  return {{"version", 1}, {"options", task_options_to_json(options_)}, {"tasks", tasks}};
}

Session Session::from_json(const json& j) {
  try {
    Session s;
    s.options_ = task_options_from_json(j.at("options"));
    for (const auto& tj : j.at("tasks")) {
      Task t;
      t.id = tj.at("id").get<std::string>();
      t.kind = task_kind_from_string(tj.at("kind").get<std::string>());
      if (!tj.at("object_id").is_null()) t.object_id = tj["object_id"].get<int>();
      t.class_id = tj.at("class_id").get<int>();
      t.view = view_from(tj.at("view"));
      t.status = task_status_from_string(tj.at("status").get<std::string>());
      for (const auto& a : tj.at("answers")) t.answers.push_back({a.at("reviewer").get<std::string>(), a.at("payload")});
      if (!tj.at("resolution").is_null()) t.resolution = tj["resolution"];
      t.applied = tj.at("applied").get<bool>();
      s.tasks_.push_back(std::move(t));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("task file: ") + e.what());
  }
}

// --- applying answers --------------------------------------------------------

std::vector<int> faces_under_mask(const std::vector<char>& pano_pixels, const mvc::PanoramaHits& hits,
                                  std::size_t num_faces) {
  if (pano_pixels.size() != hits.face.size())
    throw Error(ErrorCode::kDimensionMismatch, "mask and hit map differ in size");
  std::vector<int> seen(num_faces, 0), inside(num_faces, 0);
  for (std::size_t p = 0; p < hits.face.size(); ++p) {
    const int f = hits.face[p];
    if (f < 0) continue;
    ++seen[f];
    inside[f] += pano_pixels[p] != 0;
  }
  std::vector<int> out;
  for (std::size_t f = 0; f < num_faces; ++f)
    if (inside[f] > 0 && 2 * inside[f] >= seen[f]) out.push_back(static_cast<int>(f));
  return out;
}

std::vector<char> crop_mask_to_pano(const BinaryMask& crop, const TaskView& view, int pano_width, int pano_height) {
  std::vector<char> out(static_cast<std::size_t>(pano_width) * pano_height, 0);
  if (!crop.any()) return out;
  const geometry::ViewProjector proj(view.camera());
  const auto dirs = geometry::pano_directions(pano_width, pano_height);
  for (std::size_t p = 0; p < dirs.size(); ++p) {
    int u = 0, v = 0;
    if (proj.pixel_of(dirs[p], u, v) && crop.at(u, v)) out[p] = 1;
  }
  return out;
}

BinaryMask task_overlay(const Task& task, const LabelMap2D& pano_labels) {
  BinaryMask mask(task.view.size, task.view.size);
  if (!task.object_id) return mask;
  const auto cam = task.view.camera();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto [u, v] = geometry::dir_to_pano_index(cam.pixel_dir_pano(x, y), pano_labels.width, pano_labels.height);
      if (pano_labels.instance_ids[pano_labels.index(u, v)] == *task.object_id) mask.set(x, y);
    }
  }
  return mask;
}

json ApplyReport::to_json() const {
  return {{"removed", removed}, {"updated", updated}, {"created", created}, {"tasks_applied", tasks_applied}};
}

ApplyReport apply_verification(Session& session, graph::SceneGraph& graph, FaceLabelMap& labels,
                               const ApplyContext& ctx) {
  const std::size_t nf = ctx.inputs.mesh.num_faces();
  if (labels.size() != nf) throw Error(ErrorCode::kDimensionMismatch, "face labels do not match the mesh");
  ApplyReport report;
  std::set<int> touched;

  auto claim = [&](const std::vector<int>& faces, int id, int cls) {
    for (int f : faces) {
      if (labels.instance_ids[f] != 0 && labels.instance_ids[f] != id) touched.insert(labels.instance_ids[f]);
      labels.class_ids[f] = cls;
      labels.instance_ids[f] = id;
    }
    touched.insert(id);
  };

  for (Task* task : session.unapplied()) {
    const json& res = *task->resolution;
    switch (task->kind) {
      case TaskKind::kVerifyLabel:
        if (!res.at("correct").get<bool>()) {
          const int id = *task->object_id;
          for (std::size_t f = 0; f < nf; ++f) {
            if (labels.instance_ids[f] == id) {
              labels.instance_ids[f] = 0;
              labels.class_ids[f] = 0;
            }
          }
          touched.insert(id);
        }
        break;
      case TaskKind::kVerifyMask:
        break;
      case TaskKind::kDrawMask: {
        const int id = *task->object_id;
        const auto& hits = hits_for(ctx, task->view.camera_id);
        const auto chosen = selected_faces(res.at("polygon"), task->view, hits, nf);
        std::vector<char> seen(nf, 0);
        for (int f : hits.face)
          if (f >= 0) seen[f] = 1;
        // Faces this panorama sees are redrawn; unseen ones stay as they were.
        for (std::size_t f = 0; f < nf; ++f) {
          if (labels.instance_ids[f] == id && seen[f]) {
            labels.instance_ids[f] = 0;
            labels.class_ids[f] = 0;
          }
        }
        claim(chosen, id, task->class_id);
        if (!labels.instance_confidence.count(id)) labels.instance_confidence[id] = 1.0;
        break;
      }
      case TaskKind::kFindMissing: {
        const auto& hits = hits_for(ctx, task->view.camera_id);
        for (const auto& ins : res.at("instances")) {
          const auto chosen = selected_faces(ins.at("polygon"), task->view, hits, nf);
          if (chosen.empty()) continue;
          const int id = next_instance_id(labels, graph);
          claim(chosen, id, task->class_id);
          labels.instance_confidence[id] = 1.0;
          report.created.insert(id);
        }
        break;
      }
    }
    task->applied = true;
    ++report.tasks_applied;
  }
  if (touched.empty()) return report;

  const auto present = labels.instance_faces();
  std::erase_if(labels.instance_confidence, [&](const auto& kv) { return !present.count(kv.first); });
  for (int id : touched) {
    if (!present.count(id)) {
      if (graph.find_object(id)) report.removed.insert(id);
    } else if (!report.created.count(id)) {
      report.updated.insert(id);
    }
  }
  graph::update_objects(graph, labels, touched, ctx.inputs, ctx.options);
  return report;
}

}  // namespace sg3d::verification
