// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// sg3d command line: build, evaluate, serve-verify, apply-answers, generate.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "review_service.hpp"
#include "sg3d/error.hpp"
#include "sg3d/pipeline.hpp"

// After Eigen: httplib pulls in headers that clash with its templates.
#include <httplib.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sg3d;

namespace {

pipeline::Stage last_of(const std::string& stages) {
  // "--stages framing" or a comma list; the furthest stage wins.
  pipeline::Stage last = pipeline::Stage::kIngest;
  std::stringstream ss(stages);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) last = std::max(last, pipeline::stage_from_string(item));
  return last;
}

std::vector<int> parse_classes(const std::string& list, const detector::ClassVocabulary& vocab) {
  std::vector<int> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::all_of(item.begin(), item.end(), ::isdigit)) {
      out.push_back(std::stoi(item));
    } else if (auto id = vocab.id(item)) {
      out.push_back(*id);
    } else {
      throw Error(ErrorCode::kUnknownClass, "unknown class '" + item + "'");
    }
  }
  return out;
}

int cmd_build(pipeline::PipelineConfig cfg, const CLI::App& opts, const std::string& config_file,
              const std::string& stages, const std::string& missing, bool zero_noise) {
  if (!config_file.empty()) {
    // The file is the base; flags given on the command line override it.
    const pipeline::PipelineConfig flags = cfg;
    cfg = pipeline::PipelineConfig::from_json(pipeline::read_json(config_file));
    const auto given = [&](const char* name) { return opts.count(name) > 0; };
    if (given("--mesh")) cfg.mesh = flags.mesh;
    if (given("--panos")) cfg.panos = flags.panos;
    if (given("--poses")) cfg.poses = flags.poses;
    if (given("--detections")) cfg.detections = flags.detections;
    if (given("--baseline-detections")) cfg.baseline_detections = flags.baseline_detections;
    if (given("--synthetic-seed")) cfg.synthetic_seed = flags.synthetic_seed;
    if (given("--rooms")) cfg.rooms = flags.rooms;
    if (given("--vocabulary")) cfg.vocabulary = flags.vocabulary;
    if (given("--out")) cfg.out = flags.out;
    if (given("--threads")) cfg.threads = flags.threads;
    if (given("--score-threshold")) cfg.score_threshold = flags.score_threshold;
    if (given("--eval-gt")) cfg.eval_gt = flags.eval_gt;
    if (given("--voxel-cell")) cfg.graph.voxel_cell = flags.graph.voxel_cell;
    if (given("--all-pairs")) cfg.graph.all_pairs = true;
    if (given("--fill-holes")) cfg.aggregate.fill_holes = true;
    if (given("--eight-connected")) cfg.connectivity = flags.connectivity;
    if (given("--no-label-images")) cfg.write_label_images = false;
    cfg.resume = flags.resume;
  }
  if (cfg.out.empty()) throw Error(ErrorCode::kConfig, "no output directory (--out or \"out\" in the config)");
  if (!stages.empty()) cfg.last_stage = last_of(stages);
  if (zero_noise) cfg.noise = synthetic::NoiseParams::zero();
  if (!missing.empty()) {
    const auto vocab =
        cfg.vocabulary.empty() ? detector::ClassVocabulary::coco() : detector::ClassVocabulary::load(cfg.vocabulary);
    cfg.tasks.missing_classes = parse_classes(missing, vocab);
  }
  const auto result = pipeline::run_pipeline(cfg);
  if (result.reused) {
    std::cout << "outputs in " << cfg.out << " are up to date\n";
    return 0;
  }
  const json& m = result.manifest;
  std::cout << "stages: " << m["stages"].dump() << "\n";
  for (const auto& w : m["stats"].value("warnings", json::array())) std::cerr << "warning: " << w.get<std::string>() << "\n";
  if (result.graph)
    std::cout << "graph: " << result.graph->objects.size() << " objects, " << result.graph->edges.size() << " edges\n";
  if (!result.reports.empty()) std::cout << eval::format_reports(result.reports);
  std::cout << "wrote " << cfg.out << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& run, const fs::path& gt_dir) {
  auto cfg = pipeline::PipelineConfig::from_json(pipeline::read_json(run / "manifest.json").at("config"));
  cfg.detections.clear();
  cfg.baseline_detections.clear();
  if (!gt_dir.empty()) cfg.eval_gt = gt_dir;
  const auto in = pipeline::load_inputs(cfg);
  const auto gt = pipeline::load_ground_truth(cfg, in);
  if (!gt) throw Error(ErrorCode::kConfig, "no ground truth: pass --gt");
  auto pred = face_labels_from_json(pipeline::read_json(run / "face_labels.json"), in.mesh.num_faces());
  pred.instance_confidence = confidences_from_json(pipeline::read_json(run / "confidences.json"));

  std::vector<eval::EvalReport> reports;
  std::vector<eval::Instance> gt2, p2;
  int image = 0;
  for (const auto& pano : in.panoramas) {
    const fs::path stem = run / "labels" / "framing_mvc" / pano.id;
    const auto it = gt->panos.find(pano.id);
    if (it == gt->panos.end() || !fs::exists(stem.string() + "_class.png")) continue;
    for (auto& x : eval::instances_from_labels(it->second, image)) gt2.push_back(std::move(x));
    for (auto& x : eval::instances_from_labels(import_label_map(stem), image)) p2.push_back(std::move(x));
    ++image;
  }
  if (image > 0) reports.push_back(eval::compare_stages({{"framing+mvc", p2}}, gt2, "2D"));
  reports.push_back(eval::compare_stages({{"framing+mvc", eval::instances_from_faces(pred, 0)}},
                                         eval::instances_from_faces(gt->faces, 0), "3D", {in.mesh.face_areas}));
  std::cout << eval::format_reports(reports);
  json rep = json::array();
  for (const auto& r : reports) rep.push_back(r.to_json());
  pipeline::write_file_atomic(run / "eval.json", json{{"reports", rep}}.dump(1) + "\n");
  return 0;
}

int cmd_apply(const fs::path& run, const fs::path& answers_path, int threads) {
  auto ws = pipeline::Workspace::open(run, threads);
  const json doc = pipeline::read_json(answers_path);
  const json& list = doc.is_array() ? doc : doc.at("answers");
  int rejected = 0;
  for (const auto& a : list) {
    const auto res = ws.session().submit(a.at("task_id").get<std::string>(), a.at("reviewer").get<std::string>(),
                                         a.at("answer"));
    if (res.status == verification::SubmitStatus::kDuplicate || res.status == verification::SubmitStatus::kClosed ||
        res.status == verification::SubmitStatus::kNotFound || res.status == verification::SubmitStatus::kInvalid) {
      ++rejected;
      std::cerr << a.at("task_id").get<std::string>() << ": " << verification::to_string(res.status) << " "
                << res.message << "\n";
    }
  }
  const auto report = ws.apply();
  ws.save();
  std::cout << report.to_json().dump() << "\n";
  return rejected ? 3 : 0;
}

int cmd_serve(const fs::path& run, const std::string& host, int port, int threads) {
  review::ReviewService service(pipeline::Workspace::open(run, threads));
  httplib::Server server;
  service.mount(server);
  std::cout << "serving " << run << " on http://" << host << ":" << port << "\n" << std::flush;
  if (!server.listen(host, port)) throw Error(ErrorCode::kIo, "cannot listen on port " + std::to_string(port));
  return 0;
}

int cmd_generate(std::uint64_t seed, const fs::path& out, bool zero_noise, bool detections, int threads) {
  pipeline::PipelineConfig cfg;
  cfg.synthetic_seed = seed;
  cfg.threads = threads;
  auto in = pipeline::load_inputs(cfg);
  fs::create_directories(out / "gt" / "labels");
  meshio::save_obj(out / "mesh.obj", in.mesh);
  meshio::save_rooms(out / "rooms.json", in.rooms);
  for (auto& p : in.panoramas) {
    p.image_path = out / (p.id + ".png");
    write_png(p.image_path, p.image);
  }
  meshio::save_pose_manifest(out / "poses.json", in.panoramas);
  const auto gt = pipeline::load_ground_truth(cfg, in);
  pipeline::write_file_atomic(out / "gt" / "face_labels.json", face_labels_to_json(gt->faces).dump() + "\n");
  for (const auto& [id, labels] : gt->panos) export_label_map(out / "gt" / "labels" / id, labels, in.vocabulary.names());
  if (detections) {
    const auto noise = zero_noise ? synthetic::NoiseParams::zero() : synthetic::NoiseParams{};
    const synthetic::SyntheticDetector det(*in.synthetic, in.truth, noise, seed);
    for (const auto& [grid, name] : {std::pair{framing::sample_view_grid(), "detections.jsonl"},
                                     std::pair{framing::baseline_grid(), "baseline_detections.jsonl"}}) {
      std::vector<detector::DetectionRecord> all;
      for (std::size_t i = 0; i < in.panoramas.size(); ++i)
        for (const auto& v : grid.views)
          for (auto& r : det.detect(i, v.camera())) all.push_back(std::move(r));
      detector::save_detections(out / name, all);
    }
  }
  std::cout << "wrote synthetic scene " << seed << " (" << in.synthetic->objects.size() << " objects, "
            << in.panoramas.size() << " panoramas) to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sg3d: 3D scene graphs from meshes, panoramas and 2D detections"};
  app.require_subcommand(1);

  pipeline::PipelineConfig cfg;
  std::string config_file, stages, missing, seed_text;
  bool zero_noise = false, no_resume = false, no_images = false, eight = false;
  auto* build = app.add_subcommand("build", "run the pipeline");
  build->add_option("--config", config_file, "JSON config (flags override it)");
  build->add_option("--mesh", cfg.mesh, "OBJ or PLY mesh");
  build->add_option("--panos", cfg.panos, "panorama directory");
  build->add_option("--poses", cfg.poses, "pose manifest JSON");
  build->add_option("--detections", cfg.detections, "detections JSONL");
  build->add_option("--baseline-detections", cfg.baseline_detections, "cube-view detections JSONL");
  build->add_option("--synthetic-seed", seed_text, "generate a synthetic scene instead of reading files");
  build->add_option("--rooms", cfg.rooms, "room annotation JSON");
  build->add_option("--vocabulary", cfg.vocabulary, "class names JSON (default COCO)");
  build->add_option("--out", cfg.out, "output directory");
  build->add_option("--stages", stages, "last stage: ingest, framing, mvc, graph, eval");
  build->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  build->add_option("--score-threshold", cfg.score_threshold, "drop detections below this score");
  build->add_option("--eval-gt", cfg.eval_gt, "ground truth directory");
  build->add_option("--voxel-cell", cfg.graph.voxel_cell, "voxel size in meters");
  build->add_option("--missing-classes", missing, "classes swept by find_missing tasks (names or ids)");
  build->add_flag("--all-pairs", cfg.graph.all_pairs, "emit occlusion and spatial order for every pair");
  build->add_flag("--fill-holes", cfg.aggregate.fill_holes, "fill unlabeled faces by neighbor majority");
  build->add_flag("--eight-connected", eight, "8-connected 2D instances");
  build->add_flag("--zero-noise", zero_noise, "synthetic detector without noise");
  build->add_flag("--no-resume", no_resume, "always recompute");
  build->add_flag("--no-label-images", no_images, "skip label PNG export");

  fs::path run, gt_dir, answers;
  int threads = 1, port = 8080;
  std::string host = "127.0.0.1";
  auto* evaluate = app.add_subcommand("evaluate", "score a run against ground truth");
  evaluate->add_option("--run", run, "run directory")->required();
  evaluate->add_option("--gt", gt_dir, "ground truth directory (synthetic runs use their own)");

  auto* serve = app.add_subcommand("serve-verify", "serve the review API for a run");
  serve->add_option("--run", run, "run directory")->required();
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--threads", threads, "worker threads");

  auto* apply = app.add_subcommand("apply-answers", "apply reviewer answers from a JSON file");
  apply->add_option("--run", run, "run directory")->required();
  apply->add_option("--answers", answers, "answers JSON")->required();
  apply->add_option("--threads", threads, "worker threads");

  std::uint64_t gen_seed = 0;
  fs::path gen_out;
  bool gen_dets = false;
  auto* generate = app.add_subcommand("generate", "write a synthetic scene as input files");
  generate->add_option("--seed", gen_seed, "scene seed")->required();
  generate->add_option("--out", gen_out, "output directory")->required();
  generate->add_flag("--detections", gen_dets, "also write synthetic detections");
  generate->add_flag("--zero-noise", zero_noise, "detections without noise");
  generate->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*build) {
      if (!seed_text.empty()) cfg.synthetic_seed = std::stoull(seed_text);
      cfg.resume = !no_resume;
      cfg.write_label_images = !no_images;
      if (eight) cfg.connectivity = framing::Connectivity::kEight;
      return cmd_build(cfg, *build, config_file, stages, missing, zero_noise);
    }
    if (*evaluate) return cmd_evaluate(run, gt_dir);
    if (*serve) return cmd_serve(run, host, port, threads);
    if (*apply) return cmd_apply(run, answers, threads);
    if (*generate) return cmd_generate(gen_seed, gen_out, zero_noise, gen_dets, threads);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
