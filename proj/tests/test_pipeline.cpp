// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "sg3d/error.hpp"
#include "sg3d/image.hpp"
#include "sg3d/pipeline.hpp"
#include "support.hpp"

namespace sg3d {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// One reference run shared by the suite.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tmp_ = new TempDir("pipeline");
    ref_cfg_ = new pipeline::PipelineConfig(testing::small_config(2, *tmp_ / "ref"));
    ref_ = new pipeline::PipelineResult(pipeline::run_pipeline(*ref_cfg_));
  }
  static void TearDownTestSuite() {
    delete ref_;
    delete ref_cfg_;
    delete tmp_;
  }
  static fs::path ref_dir() { return ref_cfg_->out; }

  static TempDir* tmp_;
  static pipeline::PipelineConfig* ref_cfg_;
  static pipeline::PipelineResult* ref_;
};

TempDir* PipelineTest::tmp_ = nullptr;
pipeline::PipelineConfig* PipelineTest::ref_cfg_ = nullptr;
pipeline::PipelineResult* PipelineTest::ref_ = nullptr;

TEST_F(PipelineTest, WritesEveryArtifact) {
  for (const char* f : {"manifest.json", "graph.json", "face_labels.json", "confidences.json", "tasks.json",
                        "eval.json", "eval.txt"})
    EXPECT_TRUE(fs::exists(ref_dir() / f)) << f;
  const json m = pipeline::read_json(ref_dir() / "manifest.json");
  EXPECT_TRUE(m["complete"].get<bool>());
  EXPECT_EQ(m["stages"], json({"ingest", "framing", "mvc", "graph", "eval"}));
  EXPECT_EQ(m["input_hash"].get<std::string>().size(), 16u);
  EXPECT_TRUE(graph::validate_graph_json(pipeline::read_json(ref_dir() / "graph.json")).empty());
  ASSERT_EQ(ref_->reports.size(), 2u);
  EXPECT_EQ(ref_->reports[0].modality, "2D");
  EXPECT_EQ(ref_->reports[1].rows.size(), 3u);
  EXPECT_EQ(ref_->stages.size(), 3u);
  for (const auto& e : fs::directory_iterator(tmp_->path()))
    EXPECT_EQ(e.path().filename().string().find(".partial-"), std::string::npos);
}

TEST_F(PipelineTest, SameSeedAnyThreadCountIsByteIdentical) {
  const unsigned max_threads = std::max(1u, std::thread::hardware_concurrency());
  for (int threads : {1, 4, static_cast<int>(max_threads)}) {
    auto cfg = testing::small_config(2, *tmp_ / ("t" + std::to_string(threads)));
    cfg.threads = threads;
    pipeline::run_pipeline(cfg);
    for (const char* f : {"graph.json", "face_labels.json", "confidences.json", "tasks.json", "eval.json"})
      EXPECT_EQ(slurp(cfg.out / f), slurp(ref_dir() / f)) << f << " with " << threads << " threads";
    fs::remove_all(cfg.out);
  }
}

TEST_F(PipelineTest, StopsAfterFraming) {
  auto cfg = testing::small_config(2, *tmp_ / "framing_only");
  cfg.last_stage = pipeline::Stage::kFraming;
  cfg.write_label_images = true;
  const auto r = pipeline::run_pipeline(cfg);
  EXPECT_FALSE(r.face_labels.has_value());
  EXPECT_FALSE(r.graph.has_value());
  EXPECT_TRUE(fs::exists(cfg.out / "labels" / "framing"));
  EXPECT_FALSE(fs::exists(cfg.out / "face_labels.json"));
  EXPECT_FALSE(fs::exists(cfg.out / "graph.json"));
  const json m = pipeline::read_json(cfg.out / "manifest.json");
  EXPECT_EQ(m["last_stage"], "framing");
  EXPECT_EQ(m["stages"], json({"ingest", "framing"}));
  // Framing labels match the full run's framing stage.
  for (const auto& [id, labels] : r.stages[1].panos) EXPECT_EQ(labels, ref_->stages[1].panos.at(id));
}

TEST_F(PipelineTest, ResumeReusesMatchingOutput) {
  auto cfg = *ref_cfg_;
  cfg.resume = true;
  const auto before = slurp(ref_dir() / "manifest.json");
  EXPECT_TRUE(pipeline::run_pipeline(cfg).reused);
  EXPECT_EQ(slurp(ref_dir() / "manifest.json"), before);
  cfg.threads = 3;  // threading is not part of the hash
  EXPECT_TRUE(pipeline::run_pipeline(cfg).reused);
  EXPECT_EQ(pipeline::input_hash(cfg), pipeline::input_hash(*ref_cfg_));
  cfg.score_threshold = 0.8;
  EXPECT_NE(pipeline::input_hash(cfg), pipeline::input_hash(*ref_cfg_));
  cfg.out = *tmp_ / "resume_copy";
  fs::copy(ref_dir(), cfg.out, fs::copy_options::recursive);
  EXPECT_FALSE(pipeline::run_pipeline(cfg).reused);
  EXPECT_NE(slurp(cfg.out / "manifest.json"), before);
  fs::remove_all(cfg.out);
}

TEST_F(PipelineTest, FailureLeavesNoPartialOutput) {
  pipeline::PipelineConfig cfg;
  cfg.mesh = *tmp_ / "missing.obj";
  cfg.panos = tmp_->path();
  cfg.poses = *tmp_ / "missing_poses.json";
  cfg.detections = *tmp_ / "missing.jsonl";
  cfg.rooms = *tmp_ / "missing_rooms.json";
  cfg.out = *tmp_ / "failed";
  try {
    pipeline::run_pipeline(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStage);
    EXPECT_NE(std::string(e.what()).find("ingest"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(fs::exists(cfg.out));
  // An earlier good output survives a failed rebuild.
  cfg.out = *tmp_ / "kept";
  fs::copy(ref_dir(), cfg.out, fs::copy_options::recursive);
  EXPECT_THROW(pipeline::run_pipeline(cfg), Error);
  EXPECT_EQ(slurp(cfg.out / "graph.json"), slurp(ref_dir() / "graph.json"));
  for (const auto& e : fs::directory_iterator(tmp_->path()))
    EXPECT_EQ(e.path().filename().string().find(".partial-"), std::string::npos);
  fs::remove_all(cfg.out);
}

TEST_F(PipelineTest, ConfigValidation) {
  pipeline::PipelineConfig cfg;
  cfg.out = *tmp_ / "x";
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW((void)pipeline::stage_from_string("render"), Error);
  EXPECT_EQ(pipeline::stage_from_string("mvc"), pipeline::Stage::kMvc);
  const auto round = pipeline::PipelineConfig::from_json(ref_cfg_->to_json());
  EXPECT_EQ(round.to_json(), ref_cfg_->to_json());
}

// The same scene written to files and read back gives the same labels and graph.
TEST_F(PipelineTest, FileInputsMatchSyntheticRun) {
  const fs::path dir = *tmp_ / "files";
  fs::create_directories(dir);
  auto in = pipeline::load_inputs(*ref_cfg_);
  meshio::save_obj(dir / "mesh.obj", in.mesh);
  meshio::save_rooms(dir / "rooms.json", in.rooms);
  for (auto& p : in.panoramas) {
    p.image_path = dir / (p.id + ".png");
    write_png(p.image_path, p.image);
  }
  meshio::save_pose_manifest(dir / "poses.json", in.panoramas);
  const synthetic::SyntheticDetector det(*in.synthetic, in.truth, ref_cfg_->noise, *ref_cfg_->synthetic_seed);
  const auto grid = framing::sample_view_grid(ref_cfg_->grid);
  std::vector<detector::DetectionRecord> all;
  for (std::size_t i = 0; i < in.panoramas.size(); ++i)
    for (const auto& v : grid.views)
      for (auto& r : det.detect(i, v.camera())) all.push_back(std::move(r));
  detector::save_detections(dir / "detections.jsonl", all);

  pipeline::PipelineConfig cfg = *ref_cfg_;
  cfg.synthetic_seed.reset();
  cfg.mesh = dir / "mesh.obj";
  cfg.panos = dir;
  cfg.poses = dir / "poses.json";
  cfg.detections = dir / "detections.jsonl";
  cfg.rooms = dir / "rooms.json";
  cfg.out = *tmp_ / "from_files";
  pipeline::run_pipeline(cfg);
  EXPECT_EQ(slurp(cfg.out / "face_labels.json"), slurp(ref_dir() / "face_labels.json"));
  EXPECT_EQ(slurp(cfg.out / "graph.json"), slurp(ref_dir() / "graph.json"));
  EXPECT_FALSE(fs::exists(cfg.out / "eval.json"));  // no ground truth given
  fs::remove_all(cfg.out);
}

TEST_F(PipelineTest, WorkspaceApplyMatchesRebuild) {
  const fs::path run = *tmp_ / "ws";
  fs::copy(ref_dir(), run, fs::copy_options::recursive);
  auto ws = pipeline::Workspace::open(run);
  ASSERT_GE(ws.graph().objects.size(), 2u);
  const int victim = ws.graph().objects.front().id;
  const std::string task = "obj" + std::to_string(victim) + "/label";
  ws.session().submit(task, "ann", {{"correct", false}});
  ws.session().submit(task, "bob", {{"correct", false}});
  const auto report = ws.apply();
  EXPECT_EQ(report.removed, std::set<int>{victim});
  ws.save();
  const auto again = pipeline::Workspace::open(run);
  EXPECT_EQ(again.graph().find_object(victim), nullptr);
  EXPECT_EQ(again.session().find(task)->status, verification::TaskStatus::kResolved);
  EXPECT_TRUE(again.session().find(task)->applied);
  EXPECT_TRUE(graph::validate_graph_json(pipeline::read_json(run / "graph.json")).empty());
  // Task renders have the task's size.
  const auto img = ws.render(*ws.session().find("obj" + std::to_string(ws.graph().objects.front().id) + "/label"));
  EXPECT_EQ(img.width(), ws.session().options().render_size);
  fs::remove_all(run);
}

#ifdef SG3D_CLI
int run_cli(const std::string& args) {
  const int rc = std::system((std::string(SG3D_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST_F(PipelineTest, CliApplyAnswers) {
  const fs::path run = *tmp_ / "cli";
  fs::copy(ref_dir(), run, fs::copy_options::recursive);
  const json g = pipeline::read_json(run / "graph.json");
  const int victim = g["objects"][0]["id"].get<int>();
  const int kept = g["objects"][1]["id"].get<int>();
  const std::string vt = "obj" + std::to_string(victim) + "/label", kt = "obj" + std::to_string(kept) + "/label";
  const json answers = {{"answers",
                         {{{"task_id", vt}, {"reviewer", "ann"}, {"answer", {{"correct", false}}}},
                          {{"task_id", vt}, {"reviewer", "bob"}, {"answer", {{"correct", false}}}},
                          {{"task_id", kt}, {"reviewer", "ann"}, {"answer", {{"correct", true}}}},
                          {{"task_id", kt}, {"reviewer", "bob"}, {"answer", {{"correct", true}}}}}}};
  std::ofstream(run / "answers.json") << answers.dump();
  ASSERT_EQ(run_cli("apply-answers --run " + run.string() + " --answers " + (run / "answers.json").string()), 0);
  const json after = pipeline::read_json(run / "graph.json");
  EXPECT_TRUE(graph::validate_graph_json(after).empty());
  for (const auto& o : after["objects"]) EXPECT_NE(o["id"].get<int>(), victim);
  for (const auto& e : after["edges"])
    for (const auto& end : e["endpoints"]) EXPECT_NE(end.get<std::string>(), graph::object_ref(victim));
  const json tasks = pipeline::read_json(run / "tasks.json");
  bool spawned = false;
  for (const auto& t : tasks["tasks"]) spawned = spawned || t["id"] == "obj" + std::to_string(kept) + "/mask";
  EXPECT_TRUE(spawned);

  // Same answers again: every one is rejected as closed, nothing changes.
  const auto before = slurp(run / "graph.json");
  EXPECT_EQ(run_cli("apply-answers --run " + run.string() + " --answers " + (run / "answers.json").string()), 3);
  EXPECT_EQ(slurp(run / "graph.json"), before);
  EXPECT_EQ(run_cli("apply-answers --run " + (*tmp_ / "nowhere").string() + " --answers x.json"), 2);
  fs::remove_all(run);
}

TEST_F(PipelineTest, CliBuildFromConfigStopsAtStage) {
  const fs::path out = *tmp_ / "cli_build";
  auto cfg = *ref_cfg_;
  cfg.out = out;
  std::ofstream(*tmp_ / "cfg.json") << cfg.to_json().dump();
  ASSERT_EQ(run_cli("build --config " + (*tmp_ / "cfg.json").string() + " --stages ingest,framing --no-resume"), 0);
  EXPECT_EQ(pipeline::read_json(out / "manifest.json")["last_stage"], "framing");
  ASSERT_EQ(run_cli("build --config " + (*tmp_ / "cfg.json").string() + " --no-resume"), 0);
  EXPECT_EQ(slurp(out / "graph.json"), slurp(ref_dir() / "graph.json"));
  EXPECT_EQ(run_cli("build --config " + (*tmp_ / "cfg.json").string() + " --stages paint"), 2);
  fs::remove_all(out);
}
#endif

TEST(ZeroNoise, RecoversTheSceneExactly) {
  TempDir tmp("zero");
  auto cfg = testing::small_config(1, tmp / "run");
  cfg.noise = synthetic::NoiseParams::zero();
  const auto r = pipeline::run_pipeline(cfg);
  ASSERT_EQ(r.reports.size(), 2u);
  const auto& m3 = r.reports[1].rows.back().metrics;
  EXPECT_EQ(r.reports[1].rows.back().stage, "framing+mvc");
  EXPECT_DOUBLE_EQ(m3.ap, 1.0);
  EXPECT_DOUBLE_EQ(m3.ap50, 1.0);
  EXPECT_DOUBLE_EQ(m3.ap75, 1.0);
  const auto in = pipeline::load_inputs(cfg);
  EXPECT_EQ(r.graph->objects.size(), in.synthetic->objects.size());
}

}  // namespace
}  // namespace sg3d
