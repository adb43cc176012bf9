// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "sg3d/detector.hpp"
#include "sg3d/error.hpp"
#include "sg3d/image.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/mask.hpp"
#include "sg3d/meshio.hpp"
#include "sg3d/synthetic.hpp"
#include "support.hpp"

namespace sg3d {
namespace {

using nlohmann::json;
using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kCubeObj = R"(# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
)";

TEST(MeshIo, CubeObj) {
  TempDir dir("cube");
  write_text(dir / "cube.obj", kCubeObj);
  const auto r = meshio::load_mesh(dir / "cube.obj");
  EXPECT_EQ(r.mesh.vertices.size(), 8u);
  EXPECT_EQ(r.mesh.num_faces(), 12u);
  EXPECT_EQ(r.dropped_degenerate, 0);
  double area = 0;
  for (double a : r.mesh.face_areas) area += a;
  EXPECT_NEAR(area, 6.0, 1e-12);
}

TEST(MeshIo, ZeroAreaFaceIsDropped) {
  TempDir dir("degenerate");
  write_text(dir / "m.obj", std::string(kCubeObj) + "f 1 2 2\n");
  const auto r = meshio::load_mesh(dir / "m.obj");
  EXPECT_EQ(r.mesh.num_faces(), 12u);
  EXPECT_EQ(r.dropped_degenerate, 1);
}

TEST(MeshIo, ParseErrorsAndEmptyMesh) {
  TempDir dir("bad");
  write_text(dir / "bad.obj", "v 0 0 0\nv 1 0 oops\n");
  try {
    (void)meshio::load_mesh(dir / "bad.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  write_text(dir / "empty.obj", "# nothing\n");
  try {
    (void)meshio::load_mesh(dir / "empty.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGeometry);
  }
}

TEST(MeshIo, ObjAndPlyRoundTrip) {
  TempDir dir("roundtrip");
  const auto scene = synthetic::generate_scene(2, testing::small_scene_params());
  meshio::save_obj(dir / "m.obj", scene.mesh);
  meshio::save_ply(dir / "m.ply", scene.mesh);
  for (const char* name : {"m.obj", "m.ply"}) {
    const auto r = meshio::load_mesh(dir / name);
    ASSERT_EQ(r.mesh.num_faces(), scene.mesh.num_faces()) << name;
    EXPECT_EQ(r.mesh.faces, scene.mesh.faces) << name;
    ASSERT_EQ(r.mesh.vertices.size(), scene.mesh.vertices.size());
    for (std::size_t i = 0; i < r.mesh.vertices.size(); ++i) EXPECT_EQ(r.mesh.vertices[i], scene.mesh.vertices[i]);
  }
}

TEST(MeshIo, AreaCacheMatchesRecomputation) {
  const auto scene = synthetic::generate_scene(4, testing::small_scene_params());
  TriMesh m = scene.mesh;
  m.recompute_areas();
  for (std::size_t f = 0; f < m.num_faces(); ++f) EXPECT_NEAR(m.face_areas[f], scene.mesh.face_areas[f], 1e-9);
}

json pose(double x, double y, double z, std::vector<double> q, const std::string& image) {
  return {{"position", {x, y, z}}, {"quaternion", q}, {"image", image}};
}

TEST(MeshIo, PanoramasLoadInIdOrderWithPerEntryErrors) {
  TempDir dir("panos");
  write_png(dir / "b.png", RgbImage(64, 32, 3, 10));
  write_png(dir / "a.png", RgbImage(64, 32, 3, 20));
  write_png(dir / "wide.png", RgbImage(60, 40, 3, 0));
  write_png(dir / "half.png", RgbImage(64, 32, 3, 0));
  json manifest = {{"pb", pose(1, 2, 1.5, {1, 0, 0, 0}, "b.png")},
                   {"pa", pose(0, 0, 1.5, {0.7071067811865476, 0, 0, 0.7071067811865476}, "a.png")}};
  write_text(dir / "poses.json", manifest.dump());
  auto r = meshio::load_panoramas(dir.path(), dir / "poses.json");
  ASSERT_EQ(r.panoramas.size(), 2u);
  EXPECT_EQ(r.panoramas[0].id, "pa");
  EXPECT_EQ(r.panoramas[1].id, "pb");
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.panoramas[0].width, 64);

  manifest["pw"] = pose(0, 0, 0, {1, 0, 0, 0}, "wide.png");
  manifest["ph"] = pose(0, 0, 0, {0.5, 0, 0, 0}, "half.png");
  manifest["pm"] = pose(0, 0, 0, {1, 0, 0, 0}, "missing.png");
  write_text(dir / "poses.json", manifest.dump());
  r = meshio::load_panoramas(dir.path(), dir / "poses.json");
  EXPECT_EQ(r.panoramas.size(), 2u);
  ASSERT_EQ(r.errors.size(), 3u);
  std::map<std::string, ErrorCode> codes;
  for (const auto& e : r.errors) codes[e.entry] = e.code;
  EXPECT_EQ(codes.at("pw"), ErrorCode::kInvalidPanorama);
  EXPECT_EQ(codes.at("ph"), ErrorCode::kInvalidPose);
  EXPECT_EQ(codes.at("pm"), ErrorCode::kNotFound);
}

TEST(MeshIo, PoseManifestRoundTrip) {
  TempDir dir("poses");
  std::vector<meshio::Panorama> panos(2);
  panos[0].id = "x";
  panos[0].pose.position = Vec3(0.1, 0.2, 0.3);
  panos[0].pose.rotation = Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ()));
  panos[0].image_path = dir / "x.png";
  panos[1].id = "y";
  panos[1].image_path = dir / "y.png";
  for (const auto& p : panos) write_png(p.image_path, RgbImage(8, 4, 3, 0));
  meshio::save_pose_manifest(dir / "poses.json", panos);
  const auto r = meshio::load_panoramas(dir.path(), dir / "poses.json");
  ASSERT_EQ(r.panoramas.size(), 2u);
  EXPECT_EQ(r.panoramas[0].pose.position, panos[0].pose.position);
  EXPECT_NEAR(r.panoramas[0].pose.rotation.angularDistance(panos[0].pose.rotation), 0.0, 1e-12);
}

TEST(MeshIo, Rooms) {
  TempDir dir("rooms");
  write_text(dir / "rooms.json",
             R"([{"room_id": "a", "face_ids": [0, 1, 2, 3, 4, 5], "scene_category": "kitchen"},
                 {"room_id": "b", "face_ids": [6, 7, 8, 9, 10, 11]}])");
  const auto rooms = meshio::load_rooms(dir / "rooms.json", 12);
  ASSERT_EQ(rooms.size(), 2u);
  EXPECT_EQ(rooms[0].scene_category, "kitchen");
  EXPECT_FALSE(rooms[1].scene_category.has_value());
  std::size_t covered = 0;
  for (const auto& r : rooms) covered += r.face_ids.size();
  EXPECT_EQ(covered, 12u);

  write_text(dir / "overlap.json", R"([{"room_id": "a", "face_ids": [1, 7]}, {"room_id": "b", "face_ids": [7, 8]}])");
  try {
    (void)meshio::load_rooms(dir / "overlap.json", 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverlap);
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
  write_text(dir / "range.json", R"([{"room_id": "a", "face_ids": [12]}])");
  EXPECT_THROW((void)meshio::load_rooms(dir / "range.json", 12), Error);
}

// ---------------------------------------------------------------------------
// Masks and RLE.

BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double p) {
  std::bernoulli_distribution b(p);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (b(rng)) m.set(x, y);
  return m;
}

TEST(Rle, ColumnMajorCocoLayout) {
  // Rows: 0 1 1 / 1 1 0. Column-major stream 0 1 1 1 1 0.
  BinaryMask m(3, 2);
  m.set(1, 0);
  m.set(2, 0);
  m.set(0, 1);
  m.set(1, 1);
  const Rle r = rle_encode(m);
  EXPECT_EQ(r.height, 2);
  EXPECT_EQ(r.width, 3);
  EXPECT_EQ(r.counts, (std::vector<std::uint32_t>{1, 4, 1}));
  // A mask starting with a set pixel begins with a zero-length run.
  BinaryMask full(2, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) full.set(x, y);
  EXPECT_EQ(rle_encode(full).counts, (std::vector<std::uint32_t>{0, 4}));
}

TEST(Rle, RoundTripOnRandomMasks) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int i = 0; i < 300; ++i) {
    const int w = dim(rng), h = dim(rng);
    const BinaryMask m = random_mask(rng, w, h, (i % 5) / 4.0);
    const BinaryMask back = rle_decode(rle_encode(m));
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.count(), m.count());
    EXPECT_EQ(detector::rle_from_json(detector::rle_to_json(rle_encode(m))), rle_encode(m));
  }
}

TEST(Rle, MalformedInputIsRejected) {
  try {
    (void)rle_decode(Rle{2, 2, {1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRle);
  }
}

TEST(Mask, EqualityIgnoresStorageBounds) {
  BinaryMask a(10, 10), b(10, 10, PixelBox{2, 2, 8, 8});
  a.set(3, 4);
  b.set(3, 4);
  EXPECT_EQ(a, b);
  a.shrink_to_fit();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.bounds(), (PixelBox{3, 4, 4, 5}));
}

TEST(Mask, MorphologyGrowsAndShrinks) {
  BinaryMask m(20, 20);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) m.set(x, y);
  EXPECT_EQ(morph(m, 0), m);
  EXPECT_GT(morph(m, 2).count(), m.count());
  EXPECT_LT(morph(m, -2).count(), m.count());
  // Grown mask contains the original; shrunk mask is contained by it.
  const auto grown = morph(m, 1), shrunk = morph(m, -1);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      if (m.at(x, y)) {
        EXPECT_TRUE(grown.at(x, y));
      }
      if (shrunk.at(x, y)) {
        EXPECT_TRUE(m.at(x, y));
      }
    }
}

// ---------------------------------------------------------------------------
// Detection records.

std::string record_line(const std::string& view, int cls, double score, const BinaryMask& m) {
  return detector::detection_to_json({view, cls, score, m}).dump() + "\n";
}

TEST(Detections, ScoreThresholdKeepsTwoOfThree) {
  std::mt19937_64 rng(2);
  const auto vocab = detector::ClassVocabulary::coco();
  std::string text;
  for (double s : {0.9, 0.71, 0.5}) text += record_line("p@0,0,90", 62, s, random_mask(rng, 8, 8, 0.5));
  std::istringstream in(text);
  const auto r = detector::parse_detections(in, vocab);
  EXPECT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.filtered, 1);
  EXPECT_TRUE(r.errors.empty());
}

TEST(Detections, EmptyFileAndPerRecordErrors) {
  const auto vocab = detector::ClassVocabulary::coco();
  std::istringstream empty("");
  EXPECT_TRUE(detector::parse_detections(empty, vocab).records.empty());

  std::mt19937_64 rng(3);
  const BinaryMask m = random_mask(rng, 4, 4, 0.5);
  json bad_rle = detector::detection_to_json({"p@0,0,90", 62, 0.9, m});
  bad_rle["rle"]["counts"] = json::array({1, 2});
  std::string text = record_line("p@0,0,90", 62, 0.9, m) + record_line("p@0,0,90", 100000, 0.9, m) +
                     bad_rle.dump() + "\n" + "{not json\n" + record_line("p@0,0,90", 0, 0.9, m);
  std::istringstream in(text);
  const auto r = detector::parse_detections(in, vocab);
  EXPECT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.errors.size(), 4u);
  EXPECT_EQ(r.errors[0].line, 2);
  EXPECT_EQ(r.errors[0].code, ErrorCode::kUnknownClass);
  EXPECT_EQ(r.errors[1].code, ErrorCode::kMalformedRle);
  EXPECT_EQ(r.errors[2].code, ErrorCode::kFormat);
  EXPECT_EQ(r.errors[3].code, ErrorCode::kUnknownClass);
}

TEST(Detections, ThresholdIsMonotone) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> s(0.0, 1.0);
  std::vector<detector::DetectionRecord> recs;
  for (int i = 0; i < 200; ++i) recs.push_back({"p@0,0,90", 62, s(rng), random_mask(rng, 4, 4, 0.5)});
  std::size_t prev = recs.size() + 1;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    auto copy = recs;
    detector::filter_by_score(copy, t);
    EXPECT_LE(copy.size(), prev);
    prev = copy.size();
  }
}

TEST(Detections, SaveLoadRoundTrip) {
  TempDir dir("dets");
  std::mt19937_64 rng(5);
  std::vector<detector::DetectionRecord> recs;
  for (int i = 0; i < 20; ++i) recs.push_back({"pano_1@-15,15,105", 57 + i % 5, 0.7 + i * 0.01, random_mask(rng, 9, 9, 0.4)});
  detector::save_detections(dir / "d.jsonl", recs);
  const auto r = detector::load_detections(dir / "d.jsonl", detector::ClassVocabulary::coco());
  EXPECT_EQ(r.records, recs);
}

TEST(Detections, ViewKeyRoundTrip) {
  const detector::ViewKey k{"pano_a", -172.5, 15, 105};
  const auto back = detector::ViewKey::parse(k.to_string());
  EXPECT_EQ(back.pano_id, "pano_a");
  EXPECT_EQ(back.yaw, -172.5);
  EXPECT_EQ(back.pitch, 15);
  EXPECT_EQ(back.fov, 105);
}

TEST(Vocabulary, CocoHasBackgroundAtZero) {
  const auto v = detector::ClassVocabulary::coco();
  EXPECT_EQ(v.name(0), "background");
  EXPECT_FALSE(v.valid_object_class(0));
  EXPECT_TRUE(v.id("chair").has_value());
  EXPECT_EQ(v.name(*v.id("chair")), "chair");
}

// ---------------------------------------------------------------------------
// Synthetic detector contract.

class SyntheticDetectorTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scene_ = new synthetic::SyntheticScene(synthetic::generate_scene(6, testing::small_scene_params()));
    bvh_ = new geometry::Bvh(geometry::Bvh::build(scene_->mesh));
    truth_ = new std::vector<synthetic::PanoramaTruth>(synthetic::render_all_truth(*scene_, *bvh_, 1));
  }
  static void TearDownTestSuite() {
    delete truth_;
    delete bvh_;
    delete scene_;
  }
  static geometry::RectCamera cam(double yaw) {
    geometry::RectCamera c;
    c.yaw_deg = yaw;
    c.width = c.height = 200;
    return c;
  }
  static synthetic::SyntheticScene* scene_;
  static geometry::Bvh* bvh_;
  static std::vector<synthetic::PanoramaTruth>* truth_;
};
synthetic::SyntheticScene* SyntheticDetectorTest::scene_ = nullptr;
geometry::Bvh* SyntheticDetectorTest::bvh_ = nullptr;
std::vector<synthetic::PanoramaTruth>* SyntheticDetectorTest::truth_ = nullptr;

TEST_F(SyntheticDetectorTest, ZeroNoiseGivesTruthMasksAtScoreOne) {
  const synthetic::SyntheticDetector det(*scene_, *truth_, synthetic::NoiseParams::zero(), 1);
  for (double yaw : {-90.0, 0.0, 90.0, 180.0}) {
    const auto c = cam(yaw);
    const auto recs = det.detect(0, c);
    // Oracle: sample the truth map at each view pixel center through the
    // generic projection.
    std::map<int, BinaryMask> want;
    const auto& pano = scene_->panoramas[0];
    for (int y = 0; y < c.height; ++y)
      for (int x = 0; x < c.width; ++x) {
        const auto [u, v] = geometry::dir_to_pano_index(c.pixel_dir_pano(x, y), pano.width, pano.height);
        const int id = (*truth_)[0].object_ids[static_cast<std::size_t>(v) * pano.width + u];
        if (id == 0) continue;
        auto [it, _] = want.try_emplace(id, c.width, c.height);
        it->second.set(x, y);
      }
    std::size_t matched = 0;
    for (const auto& r : recs) {
      EXPECT_EQ(r.score, 1.0);
      bool found = false;
      for (const auto& [id, m] : want)
        if (m == r.mask) {
          found = true;
          EXPECT_EQ(r.class_id, scene_->objects[id - 1].class_id);
        }
      EXPECT_TRUE(found);
      matched += found;
    }
    EXPECT_EQ(matched, want.size()) << "yaw " << yaw;
  }
}

TEST_F(SyntheticDetectorTest, DropProbabilityOneGivesNothing) {
  auto noise = synthetic::NoiseParams::zero();
  noise.drop_prob = 1.0;
  const synthetic::SyntheticDetector det(*scene_, *truth_, noise, 1);
  EXPECT_TRUE(det.detect(0, cam(0)).empty());
}

TEST_F(SyntheticDetectorTest, SameSeedIsByteIdentical) {
  const synthetic::SyntheticDetector a(*scene_, *truth_, {}, 7), b(*scene_, *truth_, {}, 7);
  for (double yaw : {-45.0, 30.0}) {
    const auto ra = a.detect(1, cam(yaw)), rb = b.detect(1, cam(yaw));
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i)
      EXPECT_EQ(detector::detection_to_json(ra[i]).dump(), detector::detection_to_json(rb[i]).dump());
  }
}

// ---------------------------------------------------------------------------
// Label maps.

TEST(Labels, PngPairRoundTrip) {
  TempDir dir("labels");
  LabelMap2D m(32, 16);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> c(0, 3);
  for (std::size_t p = 0; p < m.size(); ++p) {
    const int k = c(rng);
    m.class_ids[p] = k == 0 ? 0 : 56 + k;
    m.instance_ids[p] = k;
  }
  m.instance_confidence = {{1, 0.5}, {2, 0.25}, {3, 1.0}};
  ASSERT_TRUE(m.consistent());
  export_label_map(dir / "x", m, detector::ClassVocabulary::coco().names());
  EXPECT_EQ(import_label_map(dir / "x"), m);
}

TEST(Labels, FaceLabelJsonIsSparse) {
  FaceLabelMap f(6);
  f.class_ids[2] = 62;
  f.instance_ids[2] = 1;
  const json j = face_labels_to_json(f);
  EXPECT_EQ(j.size(), 1u);
  EXPECT_EQ(face_labels_from_json(j, 6), f);
  EXPECT_THROW((void)face_labels_from_json(j, 2), Error);
}

TEST(Labels, ConsistencyRejectsMixedClassInstances) {
  FaceLabelMap f(3);
  f.class_ids = {62, 63, 0};
  f.instance_ids = {1, 1, 0};
  EXPECT_FALSE(f.consistent());
  f.class_ids[1] = 62;
  EXPECT_TRUE(f.consistent());
  f.instance_ids[2] = 2;  // instance without class
  EXPECT_FALSE(f.consistent());
}

}  // namespace
}  // namespace sg3d
