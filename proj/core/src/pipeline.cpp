// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sg3d/error.hpp"
#include "sg3d/hash.hpp"
#include "sg3d/parallel.hpp"

namespace sg3d::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Stage kStages[] = {Stage::kIngest, Stage::kFraming, Stage::kMvc, Stage::kGraph, Stage::kEval};

std::string path_str(const fs::path& p) { return p.string(); }

json scene_params_json(const synthetic::SceneParams& p) {
  return {{"min_rooms", p.min_rooms},
          {"max_rooms", p.max_rooms},
          {"min_objects", p.min_objects},
          {"max_objects", p.max_objects},
          {"panos_per_room", p.panos_per_room},
          {"pano_width", p.pano_width},
          {"wall_height", p.wall_height},
          {"camera_height_min", p.camera_height_min},
          {"camera_height_max", p.camera_height_max},
          {"max_object_height", p.max_object_height},
          {"camera_clearance", p.camera_clearance},
          {"object_gap", p.object_gap},
          {"surface_step", p.surface_step},
          {"object_step", p.object_step},
          {"max_attempts", p.max_attempts},
          {"classes", p.classes}};
}

synthetic::SceneParams scene_params_from(const json& j) {
  synthetic::SceneParams p;
  p.min_rooms = j.value("min_rooms", p.min_rooms);
  p.max_rooms = j.value("max_rooms", p.max_rooms);
  p.min_objects = j.value("min_objects", p.min_objects);
  p.max_objects = j.value("max_objects", p.max_objects);
  p.panos_per_room = j.value("panos_per_room", p.panos_per_room);
  p.pano_width = j.value("pano_width", p.pano_width);
  p.wall_height = j.value("wall_height", p.wall_height);
  p.camera_height_min = j.value("camera_height_min", p.camera_height_min);
  p.camera_height_max = j.value("camera_height_max", p.camera_height_max);
  p.max_object_height = j.value("max_object_height", p.max_object_height);
  p.camera_clearance = j.value("camera_clearance", p.camera_clearance);
  p.object_gap = j.value("object_gap", p.object_gap);
  p.surface_step = j.value("surface_step", p.surface_step);
  p.object_step = j.value("object_step", p.object_step);
  p.max_attempts = j.value("max_attempts", p.max_attempts);
  p.classes = j.value("classes", p.classes);
  return p;
}

json noise_json(const synthetic::NoiseParams& n) {
  return {{"drop_prob", n.drop_prob},
          {"truncated_drop_prob", n.truncated_drop_prob},
          {"morph_radius", n.morph_radius},
          {"truncated_confusion_prob", n.truncated_confusion_prob},
          {"false_positive_prob", n.false_positive_prob},
          {"false_positive_score_factor", n.false_positive_score_factor},
          {"consistent_confusion_prob", n.consistent_confusion_prob},
          {"confusion_near_m", n.confusion_near_m},
          {"confusion_far_m", n.confusion_far_m},
          {"score_min", n.score_min},
          {"score_max", n.score_max},
          {"min_pixels", n.min_pixels}};
}

synthetic::NoiseParams noise_from(const json& j) {
  synthetic::NoiseParams n;
  n.drop_prob = j.value("drop_prob", n.drop_prob);
  n.truncated_drop_prob = j.value("truncated_drop_prob", n.truncated_drop_prob);
  n.morph_radius = j.value("morph_radius", n.morph_radius);
  n.truncated_confusion_prob = j.value("truncated_confusion_prob", n.truncated_confusion_prob);
  n.false_positive_prob = j.value("false_positive_prob", n.false_positive_prob);
  n.false_positive_score_factor = j.value("false_positive_score_factor", n.false_positive_score_factor);
  n.consistent_confusion_prob = j.value("consistent_confusion_prob", n.consistent_confusion_prob);
  n.confusion_near_m = j.value("confusion_near_m", n.confusion_near_m);
  n.confusion_far_m = j.value("confusion_far_m", n.confusion_far_m);
  n.score_min = j.value("score_min", n.score_min);
  n.score_max = j.value("score_max", n.score_max);
  n.min_pixels = j.value("min_pixels", n.min_pixels);
  return n;
}

json grid_json(const framing::GridParams& g) {
  return {{"yaw", {g.yaw_min, g.yaw_max, g.yaw_step}},
          {"pitch", {g.pitch_min, g.pitch_max, g.pitch_step}},
          {"fov", {g.fov_min, g.fov_max, g.fov_step}},
          {"size", g.size}};
}

framing::GridParams grid_from(const json& j) {
  framing::GridParams g;
  auto range = [&](const char* key, double& lo, double& hi, double& step) {
    if (!j.contains(key)) return;
    const auto r = j.at(key).get<std::array<double, 3>>();
    lo = r[0];
    hi = r[1];
    step = r[2];
  };
  range("yaw", g.yaw_min, g.yaw_max, g.yaw_step);
  range("pitch", g.pitch_min, g.pitch_max, g.pitch_step);
  range("fov", g.fov_min, g.fov_max, g.fov_step);
  g.size = j.value("size", g.size);
  return g;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t hash_path(const fs::path& p, std::uint64_t h) {
  if (p.empty()) return h;
  h = fnv1a(p.filename().string(), h);
  if (fs::is_regular_file(p)) return fnv1a(read_text(p), h);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      h = fnv1a(fs::relative(f, p).string(), h);
      h = fnv1a(read_text(f), h);
    }
  }
  return h;
}

// Runs one stage, rewrapping any failure with the stage name.
template <typename Fn>
void run_stage(Stage s, std::vector<std::string>& done, json& timings, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kStage) throw;
    throw Error(ErrorCode::kStage, std::string(to_string(s)) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kStage, std::string(to_string(s)) + ": " + e.what());
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  timings[std::string(to_string(s))] = dt.count();
  done.emplace_back(to_string(s));
}

std::vector<detector::DetectionRecord> synthetic_views(const synthetic::SyntheticDetector& det, std::size_t pano,
                                                       const framing::ViewGrid& grid, int threads) {
  std::vector<std::vector<detector::DetectionRecord>> per_view(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t v) { per_view[v] = det.detect(pano, grid.views[v].camera()); });
  std::vector<detector::DetectionRecord> out;
  for (auto& v : per_view)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

FaceLabelMap finish_3d(const mvc::FaceAggregate& agg, const TriMesh& mesh, const MeshAdjacency& adj) {
  FaceLabelMap out = mvc::extract_instances_3d(agg.labels, mesh, adj);
  mvc::score_instances_3d(out, agg.support, mesh);
  return out;
}

void export_stage_labels(const fs::path& dir, const StageLabels& s, const std::vector<std::string>& names) {
  std::string folder = s.stage;
  std::replace(folder.begin(), folder.end(), '+', '_');
  fs::create_directories(dir / folder);
  for (const auto& [id, labels] : s.panos) export_label_map(dir / folder / id, labels, names);
}

}  // namespace

// --- names and config ------------------------------------------------------

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kFraming: return "framing";
    case Stage::kMvc: return "mvc";
    case Stage::kGraph: return "graph";
    case Stage::kEval: return "eval";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  for (Stage s : kStages)
    if (to_string(s) == name) return s;
  throw Error(ErrorCode::kConfig, "unknown stage '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  if (out.empty()) throw Error(ErrorCode::kConfig, "an output directory is required");
  if (threads < 0) throw Error(ErrorCode::kConfig, "threads must be >= 0");
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
    throw Error(ErrorCode::kConfig, "score threshold must lie in [0, 1]");
  if (graph.voxel_cell <= 0.0) throw Error(ErrorCode::kConfig, "voxel cell must be positive");
  if (graph.amodal_width < 2 || graph.amodal_width % 2) throw Error(ErrorCode::kConfig, "amodal width must be even");
  if (synthetic_seed) {
    if (!mesh.empty() || !panos.empty() || !detections.empty())
      throw Error(ErrorCode::kConfig, "synthetic seed and file inputs are mutually exclusive");
    return;
  }
  if (mesh.empty() || panos.empty() || poses.empty())
    throw Error(ErrorCode::kConfig, "mesh, panorama directory and poses are required");
  if (last_stage >= Stage::kFraming && detections.empty())
    throw Error(ErrorCode::kConfig, "detections (or a synthetic seed) are required");
}

json PipelineConfig::to_json() const {
  return {{"mesh", path_str(mesh)},
          {"panos", path_str(panos)},
          {"poses", path_str(poses)},
          {"detections", path_str(detections)},
          {"baseline_detections", path_str(baseline_detections)},
          {"rooms", path_str(rooms)},
          {"vocabulary", path_str(vocabulary)},
          {"eval_gt", path_str(eval_gt)},
          {"synthetic_seed", synthetic_seed ? json(*synthetic_seed) : json(nullptr)},
          {"scene", scene_params_json(scene)},
          {"noise", noise_json(noise)},
          {"out", path_str(out)},
          {"last_stage", to_string(last_stage)},
          {"threads", threads},
          {"score_threshold", score_threshold},
          {"grid", grid_json(grid)},
          {"connectivity", connectivity == framing::Connectivity::kFour ? 4 : 8},
          {"fill_holes", aggregate.fill_holes},
          {"graph",
           {{"voxel_cell", graph.voxel_cell},
            {"amodal_width", graph.amodal_width},
            {"all_pairs", graph.all_pairs},
            {"building_function", graph.building_function ? json(*graph.building_function) : json(nullptr)}}},
          {"tasks", verification::task_options_to_json(tasks)},
          {"write_label_images", write_label_images},
          {"compare_stages", compare_stages}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    c.mesh = j.value("mesh", "");
    c.panos = j.value("panos", "");
    c.poses = j.value("poses", "");
    c.detections = j.value("detections", "");
    c.baseline_detections = j.value("baseline_detections", "");
    c.rooms = j.value("rooms", "");
    c.vocabulary = j.value("vocabulary", "");
    c.eval_gt = j.value("eval_gt", "");
    if (j.contains("synthetic_seed") && !j["synthetic_seed"].is_null())
      c.synthetic_seed = j["synthetic_seed"].get<std::uint64_t>();
    if (j.contains("scene")) c.scene = scene_params_from(j["scene"]);
    if (j.contains("noise")) c.noise = noise_from(j["noise"]);
    c.out = j.value("out", "");
    c.last_stage = stage_from_string(j.value("last_stage", "eval"));
    c.threads = j.value("threads", 1);
    c.score_threshold = j.value("score_threshold", c.score_threshold);
    if (j.contains("grid")) c.grid = grid_from(j["grid"]);
    c.connectivity = j.value("connectivity", 4) == 8 ? framing::Connectivity::kEight : framing::Connectivity::kFour;
    c.aggregate.fill_holes = j.value("fill_holes", false);
    if (j.contains("graph")) {
      const json& g = j["graph"];
      c.graph.voxel_cell = g.value("voxel_cell", c.graph.voxel_cell);
      c.graph.amodal_width = g.value("amodal_width", c.graph.amodal_width);
      c.graph.all_pairs = g.value("all_pairs", false);
      if (g.contains("building_function") && !g["building_function"].is_null())
        c.graph.building_function = g["building_function"].get<std::string>();
    }
    if (j.contains("tasks")) c.tasks = verification::task_options_from_json(j["tasks"]);
    c.write_label_images = j.value("write_label_images", true);
    c.compare_stages = j.value("compare_stages", true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config: ") + e.what());
  }
  return c;
}

std::string input_hash(const PipelineConfig& config) {
  json j = config.to_json();
  for (const char* key : {"out", "threads"}) j.erase(key);
  std::uint64_t h = fnv1a(j.dump());
  if (!config.synthetic_seed) {
    for (const auto* p : {&config.mesh, &config.poses, &config.detections, &config.baseline_detections, &config.rooms,
                          &config.vocabulary, &config.panos, &config.eval_gt})
      h = hash_path(*p, h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- files -----------------------------------------------------------------

void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

// --- inputs ----------------------------------------------------------------

Inputs load_inputs(const PipelineConfig& config) {
  Inputs in;
  if (config.synthetic_seed) {
    in.synthetic = synthetic::generate_scene(*config.synthetic_seed, config.scene);
    in.mesh = in.synthetic->mesh;
    in.rooms = in.synthetic->rooms;
    in.panoramas = in.synthetic->panoramas;
    const auto bvh = geometry::Bvh::build(in.mesh);
    in.truth = synthetic::render_all_truth(*in.synthetic, bvh, config.threads);
    for (std::size_t i = 0; i < in.panoramas.size(); ++i) in.panoramas[i].image = in.truth[i].image;
    return in;
  }
  auto mesh = meshio::load_mesh(config.mesh);
  in.mesh = std::move(mesh.mesh);
  in.dropped_degenerate = mesh.dropped_degenerate;
  auto panos = meshio::load_panoramas(config.panos, config.poses);
  in.panoramas = std::move(panos.panoramas);
  for (const auto& e : panos.errors) in.warnings.push_back("panorama " + e.entry + ": " + e.message);
  if (in.panoramas.empty()) throw Error(ErrorCode::kInvalidPanorama, "no usable panoramas");
  if (!config.rooms.empty()) in.rooms = meshio::load_rooms(config.rooms, in.mesh.num_faces());
  if (!config.vocabulary.empty()) in.vocabulary = detector::ClassVocabulary::load(config.vocabulary);
  auto read_dets = [&](const fs::path& p, std::vector<detector::DetectionRecord>& dst) {
    if (p.empty()) return;
    auto r = detector::load_detections(p, in.vocabulary, config.score_threshold);
    dst = std::move(r.records);
    in.filtered_detections += r.filtered;
    for (const auto& e : r.errors)
      in.warnings.push_back(p.filename().string() + ":" + std::to_string(e.line) + ": " + e.message);
  };
  read_dets(config.detections, in.detections);
  read_dets(config.baseline_detections, in.baseline_detections);
  return in;
}

std::optional<GroundTruth> load_ground_truth(const PipelineConfig& config, const Inputs& in) {
  GroundTruth gt;
  if (in.synthetic) {
    for (std::size_t i = 0; i < in.panoramas.size(); ++i) gt.panos[in.panoramas[i].id] = in.truth[i].labels;
    gt.faces = synthetic::truth_face_labels(*in.synthetic, synthetic::observed_faces(*in.synthetic, in.truth));
    return gt;
  }
  if (config.eval_gt.empty()) return std::nullopt;
  gt.faces = face_labels_from_json(read_json(config.eval_gt / "face_labels.json"), in.mesh.num_faces());
  for (const auto& p : in.panoramas) {
    const fs::path stem = config.eval_gt / "labels" / p.id;
    if (fs::exists(stem.string() + "_class.png")) gt.panos[p.id] = import_label_map(stem);
  }
  return gt;
}

// --- pipeline --------------------------------------------------------------

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const std::string hash = input_hash(config);
  PipelineResult result;
  const fs::path manifest_path = config.out / "manifest.json";
  if (config.resume && fs::exists(manifest_path)) {
    try {
      const json m = read_json(manifest_path);
      if (m.value("input_hash", "") == hash && m.value("complete", false) &&
          m.value("last_stage", "") == to_string(config.last_stage)) {
        result.reused = true;
        result.manifest = m;
        return result;
      }
    } catch (const Error&) {
      // unreadable manifest: rebuild
    }
  }

  fs::path parent = config.out.parent_path();
  if (parent.empty()) parent = ".";
  fs::create_directories(parent);
  const fs::path tmp = parent / (config.out.filename().string() + ".partial-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  std::vector<std::string> done;
  json timings = json::object();
  json stats = json::object();
  const Stage last = config.last_stage;
  const int threads = config.threads;
  try {
    Inputs in;
    geometry::Bvh bvh;
    run_stage(Stage::kIngest, done, timings, [&] {
      in = load_inputs(config);
      bvh = geometry::Bvh::build(in.mesh);
      stats["faces"] = in.mesh.num_faces();
      stats["panoramas"] = in.panoramas.size();
      stats["rooms"] = in.rooms.size();
      stats["dropped_degenerate_faces"] = in.dropped_degenerate;
      stats["filtered_detections"] = in.filtered_detections;
      stats["warnings"] = in.warnings;
      if (in.synthetic) stats["synthetic_objects"] = in.synthetic->objects.size();
    });
    const auto names = in.vocabulary.names();

    std::optional<synthetic::SyntheticDetector> det;
    if (in.synthetic) det.emplace(*in.synthetic, in.truth, config.noise, *config.synthetic_seed);
    const bool with_baseline = config.compare_stages && (det || !in.baseline_detections.empty());
    StageLabels baseline{"baseline", {}, {}}, framed{"framing", {}, {}}, mvc2{"framing+mvc", {}, {}};

    if (last >= Stage::kFraming) {
      run_stage(Stage::kFraming, done, timings, [&] {
        const auto grid = framing::sample_view_grid(config.grid);
        const auto cube = framing::baseline_grid(config.grid.size);
        const auto file_groups = framing::group_by_panorama(in.detections);
        const auto base_groups = framing::group_by_panorama(in.baseline_detections);
        std::size_t n_det = 0;
        for (std::size_t i = 0; i < in.panoramas.size(); ++i) {
          const auto& pano = in.panoramas[i];
          std::vector<detector::DetectionRecord> recs;
          if (det) {
            recs = synthetic_views(*det, i, grid, threads);
            detector::filter_by_score(recs, config.score_threshold);
          } else if (auto it = file_groups.find(pano.id); it != file_groups.end()) {
            recs = it->second;
          }
          n_det += recs.size();
          framed.panos[pano.id] =
              framing::run_framing(recs, pano.id, grid, pano.width, pano.height, {config.connectivity, threads});
          if (with_baseline) {
            std::vector<detector::DetectionRecord> brecs;
            if (det) {
              brecs = synthetic_views(*det, i, cube, threads);
              detector::filter_by_score(brecs, config.score_threshold);
            } else if (auto it = base_groups.find(pano.id); it != base_groups.end()) {
              brecs = it->second;
            }
            auto dets = framing::prepare_detections(brecs, pano.id, cube);
            framing::compute_footprints(dets, cube, pano.width, pano.height, threads);
            baseline.panos[pano.id] = framing::baseline_overlay(dets, pano.width, pano.height);
          }
        }
        stats["views_per_panorama"] = grid.size();
        stats["detections"] = n_det;
        if (config.write_label_images) {
          export_stage_labels(tmp / "labels", framed, names);
          if (with_baseline) export_stage_labels(tmp / "labels", baseline, names);
        }
      });
    }

    FaceLabelMap final_labels;
    if (last >= Stage::kMvc) {
      run_stage(Stage::kMvc, done, timings, [&] {
        const MeshAdjacency adj(in.mesh);
        std::vector<mvc::PanoramaVotes> votes, base_votes;
        std::map<std::string, mvc::PanoramaHits> hits;
        for (const auto& pano : in.panoramas) {
          hits[pano.id] = mvc::cast_panorama(pano, bvh, threads);
          votes.push_back(mvc::project_labels_to_faces(framed.panos.at(pano.id), pano, hits[pano.id], in.mesh));
          if (with_baseline)
            base_votes.push_back(
                mvc::project_labels_to_faces(baseline.panos.at(pano.id), pano, hits[pano.id], in.mesh));
        }
        final_labels = finish_3d(mvc::aggregate_face_labels(votes, in.mesh, config.aggregate), in.mesh, adj);
        mvc2.faces = final_labels;
        for (const auto& pano : in.panoramas) mvc2.panos[pano.id] = mvc::backproject_to_pano(final_labels, hits[pano.id]);
        if (config.compare_stages) {
          framed.faces = finish_3d(mvc::project_without_consistency(votes, in.mesh), in.mesh, adj);
          if (with_baseline)
            baseline.faces = finish_3d(mvc::project_without_consistency(base_votes, in.mesh), in.mesh, adj);
        }
        stats["instances_3d"] = final_labels.instance_classes().size();
        write_file_atomic(tmp / "face_labels.json", face_labels_to_json(final_labels).dump() + "\n");
        write_file_atomic(tmp / "confidences.json",
                          confidences_to_json(final_labels.instance_confidence).dump(1) + "\n");
        if (config.write_label_images) export_stage_labels(tmp / "labels", mvc2, names);
      });
      result.face_labels = final_labels;
    }

    if (last >= Stage::kGraph) {
      run_stage(Stage::kGraph, done, timings, [&] {
        std::vector<graph::CameraNode> cams;
        for (const auto& p : in.panoramas) cams.push_back(graph::camera_from_panorama(p));
        const graph::GraphInputs gi{in.mesh, bvh, in.rooms, cams, in.vocabulary};
        graph::GraphOptions go = config.graph;
        go.threads = threads;
        auto g = graph::build_scene_graph(final_labels, gi, go);
        const json gj = graph::to_json(g);
        if (const auto problems = graph::validate_graph_json(gj); !problems.empty())
          throw Error(ErrorCode::kFormat, "graph failed validation: " + problems.front());
        write_file_atomic(tmp / "graph.json", gj.dump() + "\n");
        const verification::Session session(verification::make_verification_tasks(g, in.panoramas, config.tasks),
                                            config.tasks);
        write_file_atomic(tmp / "tasks.json", session.to_json().dump(1) + "\n");
        stats["graph_edges"] = g.edges.size();
        result.graph = std::move(g);
      });
    }

    if (last >= Stage::kEval) {
      const auto gt = load_ground_truth(config, in);
      if (gt) {
        run_stage(Stage::kEval, done, timings, [&] {
          std::vector<const StageLabels*> rows;
          if (with_baseline) rows.push_back(&baseline);
          rows.push_back(&framed);
          rows.push_back(&mvc2);
          // 2D: one evaluation image per panorama with ground truth.
          std::vector<eval::Instance> gt2;
          std::vector<eval::StagePredictions> p2(rows.size());
          int image = 0;
          for (const auto& pano : in.panoramas) {
            const auto it = gt->panos.find(pano.id);
            if (it == gt->panos.end()) continue;
            for (auto& x : eval::instances_from_labels(it->second, image)) gt2.push_back(std::move(x));
            for (std::size_t r = 0; r < rows.size(); ++r) {
              p2[r].stage = rows[r]->stage;
              for (auto& x : eval::instances_from_labels(rows[r]->panos.at(pano.id), image))
                p2[r].predictions.push_back(std::move(x));
            }
            ++image;
          }
          std::vector<eval::StagePredictions> p3;
          for (const auto* r : rows) {
            if (r->faces.size() != in.mesh.num_faces()) continue;
            p3.push_back({r->stage, eval::instances_from_faces(r->faces, 0)});
          }
          if (image > 0) result.reports.push_back(eval::compare_stages(p2, gt2, "2D"));
          result.reports.push_back(
              eval::compare_stages(p3, eval::instances_from_faces(gt->faces, 0), "3D", {in.mesh.face_areas}));
          json rep = json::array();
          for (const auto& r : result.reports) rep.push_back(r.to_json());
          write_file_atomic(tmp / "eval.json", json{{"reports", rep}}.dump(1) + "\n");
          write_file_atomic(tmp / "eval.txt", eval::format_reports(result.reports));
        });
      }
    }

    if (with_baseline) result.stages.push_back(std::move(baseline));
    result.stages.push_back(std::move(framed));
    result.stages.push_back(std::move(mvc2));

    json manifest = {{"tool", "sg3d"},
                     {"schema_version", 1},
                     {"input_hash", hash},
                     {"last_stage", to_string(last)},
                     {"stages", done},
                     {"complete", true},
                     {"config", config.to_json()},
                     {"stats", stats},
                     {"timings_s", timings}};
    write_file_atomic(tmp / "manifest.json", manifest.dump(1) + "\n");
    result.manifest = std::move(manifest);

    fs::remove_all(config.out);
    fs::rename(tmp, config.out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
  return result;
}

// --- workspace -------------------------------------------------------------

Workspace Workspace::open(const fs::path& run_dir, int threads) {
  Workspace ws;
  ws.dir_ = run_dir;
  const json manifest = read_json(run_dir / "manifest.json");
  ws.config_ = PipelineConfig::from_json(manifest.at("config"));
  ws.config_.threads = threads;
  PipelineConfig load_cfg = ws.config_;
  load_cfg.detections.clear();
  load_cfg.baseline_detections.clear();
  ws.inputs_ = load_inputs(load_cfg);
  ws.bvh_ = geometry::Bvh::build(ws.inputs_.mesh);
  for (const auto& p : ws.inputs_.panoramas) {
    ws.cameras_.push_back(graph::camera_from_panorama(p));
    ws.hits_[p.id] = mvc::cast_panorama(p, ws.bvh_, threads);
  }
  ws.graph_ = graph::from_json(read_json(run_dir / "graph.json"));
  ws.labels_ = face_labels_from_json(read_json(run_dir / "face_labels.json"), ws.inputs_.mesh.num_faces());
  ws.labels_.instance_confidence = confidences_from_json(read_json(run_dir / "confidences.json"));
  ws.session_ = verification::Session::from_json(read_json(run_dir / "tasks.json"));
  return ws;
}

graph::GraphInputs Workspace::graph_inputs() const {
  return {inputs_.mesh, bvh_, inputs_.rooms, cameras_, inputs_.vocabulary};
}

LabelMap2D Workspace::pano_labels(const std::string& pano_id) const {
  const auto it = hits_.find(pano_id);
  if (it == hits_.end()) throw Error(ErrorCode::kNotFound, "no panorama '" + pano_id + "'");
  return mvc::backproject_to_pano(labels_, it->second);
}

RgbImage Workspace::render(const verification::Task& task) const {
  for (const auto& p : inputs_.panoramas) {
    if (p.id != task.view.camera_id) continue;
    const RgbImage img = p.image.empty() ? read_rgb_image(p.image_path) : p.image;
    return geometry::render_rect_view(img, task.view.camera(), geometry::Sampling::kBilinear);
  }
  throw Error(ErrorCode::kNotFound, "no panorama '" + task.view.camera_id + "'");
}

verification::ApplyReport Workspace::apply() {
  graph::GraphOptions go = config_.graph;
  go.threads = config_.threads;
  const auto gi = graph_inputs();
  const verification::ApplyContext ctx{gi, go, hits_};
  return verification::apply_verification(session_, graph_, labels_, ctx);
}

void Workspace::save_tasks() const { write_file_atomic(dir_ / "tasks.json", session_.to_json().dump(1) + "\n"); }

void Workspace::save() const {
  write_file_atomic(dir_ / "graph.json", graph::to_json(graph_).dump() + "\n");
  write_file_atomic(dir_ / "face_labels.json", face_labels_to_json(labels_).dump() + "\n");
  write_file_atomic(dir_ / "confidences.json", confidences_to_json(labels_.instance_confidence).dump(1) + "\n");
  save_tasks();
}

}  // namespace sg3d::pipeline
