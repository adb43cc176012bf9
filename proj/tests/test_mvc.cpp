// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sg3d/error.hpp"
#include "sg3d/mvc.hpp"
#include "sg3d/synthetic.hpp"
#include "support.hpp"

namespace sg3d {
namespace {

// Wall quad in the plane y = 5, two triangles.
TriMesh wall() {
  TriMesh m;
  m.vertices = {{-1, 5, -1}, {1, 5, -1}, {1, 5, 1}, {-1, 5, 1}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.recompute_areas();
  return m;
}

meshio::Panorama pano_at(const std::string& id, const Vec3& p, int w = 128) {
  meshio::Panorama pano;
  pano.id = id;
  pano.pose.position = p;
  pano.width = w;
  pano.height = w / 2;
  return pano;
}

LabelMap2D label_hits(const mvc::PanoramaHits& hits, int cls, int inst) {
  LabelMap2D m(hits.width, hits.height);
  for (std::size_t p = 0; p < hits.face.size(); ++p)
    if (hits.face[p] >= 0) {
      m.class_ids[p] = cls;
      m.instance_ids[p] = inst;
    }
  return m;
}

TEST(Projection, VotesCarryPixelsOverDistance) {
  const TriMesh mesh = wall();
  const auto bvh = geometry::Bvh::build(mesh);
  const auto pano = pano_at("a", {0.3, 2, 0.1});
  const auto hits = mvc::cast_panorama(pano, bvh);
  const auto votes = mvc::project_labels_to_faces(label_hits(hits, 57, 1), pano, hits, mesh);
  ASSERT_EQ(votes.votes.size(), 2u);
  for (const auto& v : votes.votes) {
    const int n = static_cast<int>(std::count(hits.face.begin(), hits.face.end(), v.face_id));
    EXPECT_EQ(v.pixels, n);
    EXPECT_DOUBLE_EQ(v.weight, n / (pano.pose.position - mesh.face_center(v.face_id)).norm());
    EXPECT_EQ(v.class_id, 57);
  }
  EXPECT_EQ(votes.observed.size(), 2u);
  EXPECT_THROW((void)mvc::project_labels_to_faces(LabelMap2D(4, 2), pano, hits, mesh), Error);
}

TEST(Aggregate, CloserPanoramaWinsOverMorePixels) {
  // Face seen at 1 m with 1 pixel and at 4 m with 3 pixels: 1/1 > 3/4.
  const TriMesh mesh = wall();
  mvc::PanoramaVotes near{"near", {{0, 57, 1, 1, 1.0 / 1.0}}, {{0, 1, 1.0}}};
  mvc::PanoramaVotes far{"far", {{0, 58, 1, 3, 3.0 / 4.0}}, {{0, 3, 0.75}}};
  const auto agg = mvc::aggregate_face_labels({far, near}, mesh);
  EXPECT_EQ(agg.labels.class_ids[0], 57);
  EXPECT_EQ(agg.labels.class_ids[1], 0);
  EXPECT_DOUBLE_EQ(agg.support[0], 1.0 / 1.75);
  // Plain projection counts pixels and ballots instead; a third ballot breaks the tie.
  mvc::PanoramaVotes far2{"far2", {{0, 58, 1, 3, 0.75}}, {{0, 3, 0.75}}};
  EXPECT_EQ(mvc::project_without_consistency({near, far, far2}, mesh).labels.class_ids[0], 58);
}

TEST(Aggregate, CloserPanoramaWinsWithRealRays) {
  const TriMesh mesh = wall();
  const auto bvh = geometry::Bvh::build(mesh);
  const auto near = pano_at("near", {0, 4, 0}), far = pano_at("far", {0, 1, 0});
  const auto hn = mvc::cast_panorama(near, bvh), hf = mvc::cast_panorama(far, bvh);
  const auto vn = mvc::project_labels_to_faces(label_hits(hn, 57, 1), near, hn, mesh);
  const auto vf = mvc::project_labels_to_faces(label_hits(hf, 58, 1), far, hf, mesh);
  const auto agg = mvc::aggregate_face_labels({vf, vn}, mesh);
  EXPECT_EQ(agg.labels.class_ids, (std::vector<int>{57, 57}));
}

TEST(Aggregate, GroupTakesModeOfStageOneClasses) {
  // Group spanning faces 0..2 voted 58, but faces 0 and 1 carry heavier 57
  // votes from other groups. The big group adopts 57 and labels face 2 too.
  TriMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 0, 0}};
  mesh.faces = {{0, 1, 2}, {1, 3, 2}, {1, 4, 3}};
  mesh.recompute_areas();
  mvc::PanoramaVotes a{"a", {{0, 58, 1, 1, 1.0}, {1, 58, 1, 1, 1.0}, {2, 58, 1, 1, 1.0}}, {}};
  mvc::PanoramaVotes b{"b", {{0, 57, 1, 1, 2.0}}, {}};
  mvc::PanoramaVotes c{"c", {{1, 57, 1, 1, 2.0}}, {}};
  const auto agg = mvc::aggregate_face_labels({a, b, c}, mesh);
  EXPECT_EQ(agg.labels.class_ids, (std::vector<int>{57, 57, 57}));
}

TEST(Aggregate, FillHolesUsesNeighborMajority) {
  TriMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 0, 0}, {-1, 1, 0}};
  mesh.faces = {{0, 1, 2}, {1, 3, 2}, {1, 4, 3}, {0, 2, 5}};
  mesh.recompute_areas();
  mvc::PanoramaVotes a{"a", {{1, 60, 1, 1, 1.0}, {2, 60, 1, 1, 1.0}, {3, 60, 2, 1, 1.0}}, {}};
  EXPECT_EQ(mvc::aggregate_face_labels({a}, mesh).labels.class_ids[0], 0);
  const auto filled = mvc::aggregate_face_labels({a}, mesh, {true});
  EXPECT_EQ(filled.labels.class_ids[0], 60);
  EXPECT_EQ(filled.support[0], 0.0);
}

TEST(Aggregate, RejectsOutOfRangeFaces) {
  mvc::PanoramaVotes a{"a", {{9, 60, 1, 1, 1.0}}, {}};
  try {
    (void)mvc::aggregate_face_labels({a}, wall());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
}

// Random single-face-group votes: the result is the per-face argmax, so
// adding votes for class c can only keep a face's class or turn it into c.
TEST(Aggregate, FusionIsMonotone) {
  std::mt19937_64 rng(1);
  TriMesh mesh;
  const int nf = 40;
  for (int i = 0; i < nf; ++i) {
    mesh.vertices.push_back({double(i), 0, 0});
    mesh.vertices.push_back({i + 0.5, 1, 0});
    mesh.vertices.push_back({double(i), 1, 0});
    mesh.faces.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  mesh.recompute_areas();
  std::uniform_int_distribution<int> cls(57, 60), face(0, nf - 1);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<mvc::PanoramaVotes> votes;
    int group = 1;
    for (int p = 0; p < 3; ++p) {
      mvc::PanoramaVotes pv{"p" + std::to_string(p), {}, {}};
      for (int f = 0; f < nf; ++f)
        if (rng() % 2) pv.votes.push_back({f, cls(rng), group++, 1, w(rng)});
      votes.push_back(pv);
    }
    const auto before = mvc::aggregate_face_labels(votes, mesh).labels.class_ids;
    const int c = cls(rng);
    mvc::PanoramaVotes extra{"p9", {}, {}};
    for (int f = 0; f < nf; ++f)
      if (rng() % 3 == 0) extra.votes.push_back({f, c, group++, 1, w(rng)});
    votes.push_back(extra);
    const auto after = mvc::aggregate_face_labels(votes, mesh).labels.class_ids;
    for (int f = 0; f < nf; ++f) EXPECT_TRUE(after[f] == before[f] || after[f] == c) << f;
  }
}

// ---------------------------------------------------------------------------
// Properties on a synthetic building.

class SceneTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scene_ = new synthetic::SyntheticScene(synthetic::generate_scene(3, testing::small_scene_params()));
    bvh_ = new geometry::Bvh(geometry::Bvh::build(scene_->mesh));
    truth_ = new std::vector<synthetic::PanoramaTruth>(synthetic::render_all_truth(*scene_, *bvh_, 4));
  }
  static void TearDownTestSuite() {
    delete truth_;
    delete bvh_;
    delete scene_;
  }

  // Truth labels with per-(panorama, object) class flips and pixel dropouts.
  static std::vector<mvc::PanoramaVotes> noisy_votes(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> cls(57, 63);
    std::vector<mvc::PanoramaVotes> out;
    for (std::size_t i = 0; i < scene_->panoramas.size(); ++i) {
      LabelMap2D labels = (*truth_)[i].labels;
      std::map<int, int> flip;
      for (const auto& [inst, c] : labels.instance_classes()) flip[inst] = rng() % 3 == 0 ? cls(rng) : c;
      for (std::size_t p = 0; p < labels.size(); ++p) {
        if (labels.instance_ids[p] == 0) continue;
        if (rng() % 10 == 0) {
          labels.class_ids[p] = labels.instance_ids[p] = 0;
        } else {
          labels.class_ids[p] = flip[labels.instance_ids[p]];
        }
      }
      mvc::PanoramaHits hits{scene_->panoramas[i].id, labels.width, labels.height, (*truth_)[i].hit_face};
      out.push_back(mvc::project_labels_to_faces(labels, scene_->panoramas[i], hits, scene_->mesh));
    }
    return out;
  }

  static FaceLabelMap fuse(const std::vector<mvc::PanoramaVotes>& votes) {
    auto agg = mvc::aggregate_face_labels(votes, scene_->mesh);
    auto labels = mvc::extract_instances_3d(agg.labels, scene_->mesh, MeshAdjacency(scene_->mesh));
    mvc::score_instances_3d(labels, agg.support, scene_->mesh);
    return labels;
  }

  static synthetic::SyntheticScene* scene_;
  static geometry::Bvh* bvh_;
  static std::vector<synthetic::PanoramaTruth>* truth_;
};

synthetic::SyntheticScene* SceneTest::scene_ = nullptr;
geometry::Bvh* SceneTest::bvh_ = nullptr;
std::vector<synthetic::PanoramaTruth>* SceneTest::truth_ = nullptr;

TEST_F(SceneTest, CastMatchesTruthRendering) {
  const auto hits = mvc::cast_panorama(scene_->panoramas[0], *bvh_, 3);
  EXPECT_EQ(hits.face, (*truth_)[0].hit_face);
}

TEST_F(SceneTest, PanoramaOrderDoesNotMatter) {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto votes = noisy_votes(seed);
    const auto a = fuse(votes);
    for (int k = 0; k < 3; ++k) {
      std::shuffle(votes.begin(), votes.end(), rng);
      EXPECT_EQ(fuse(votes), a);
    }
  }
}

TEST_F(SceneTest, UniformWeightScalingKeepsLabels) {
  auto votes = noisy_votes(21);
  const auto a = fuse(votes);
  for (auto& pv : votes) {
    for (auto& v : pv.votes) v.weight *= 0.25;
    for (auto& o : pv.observed) o.weight *= 0.25;
  }
  const auto b = fuse(votes);
  EXPECT_EQ(b.class_ids, a.class_ids);
  EXPECT_EQ(b.instance_ids, a.instance_ids);
  for (const auto& [inst, c] : a.instance_confidence) EXPECT_NEAR(b.instance_confidence.at(inst), c, 1e-12);
}

TEST_F(SceneTest, InstancesNeverSpanTwoClassesAndAreMaximal) {
  const MeshAdjacency adj(scene_->mesh);
  for (std::uint64_t seed : {31u, 32u}) {
    const auto labels = fuse(noisy_votes(seed));
    EXPECT_TRUE(labels.consistent());
    for (std::size_t f = 0; f < labels.size(); ++f) {
      if (labels.class_ids[f] == 0) continue;
      for (int n : adj.neighbors(static_cast<int>(f))) {
        if (labels.class_ids[n] == labels.class_ids[f]) {
          EXPECT_EQ(labels.instance_ids[n], labels.instance_ids[f]);
        }
      }
    }
    for (const auto& [inst, c] : labels.instance_confidence) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0 + 1e-12);
    }
  }
}

TEST_F(SceneTest, InstanceNumberingBySurfaceArea) {
  const auto labels = fuse(noisy_votes(41));
  std::map<int, double> area;
  for (std::size_t f = 0; f < labels.size(); ++f)
    if (labels.instance_ids[f]) area[labels.instance_ids[f]] += scene_->mesh.face_areas[f];
  for (auto it = area.begin(); std::next(it) != area.end(); ++it) EXPECT_GE(it->second, std::next(it)->second);
}

TEST_F(SceneTest, TruthLabelsSurviveFusion) {
  std::vector<mvc::PanoramaVotes> votes;
  for (std::size_t i = 0; i < scene_->panoramas.size(); ++i) {
    const auto& t = (*truth_)[i];
    mvc::PanoramaHits hits{scene_->panoramas[i].id, t.labels.width, t.labels.height, t.hit_face};
    votes.push_back(mvc::project_labels_to_faces(t.labels, scene_->panoramas[i], hits, scene_->mesh));
  }
  const auto fused = fuse(votes);
  const auto gt = synthetic::truth_face_labels(*scene_, synthetic::observed_faces(*scene_, *truth_));
  EXPECT_EQ(fused.class_ids, gt.class_ids);
  EXPECT_EQ(fused.instance_classes().size(), scene_->objects.size());
  for (const auto& [inst, c] : fused.instance_confidence) EXPECT_DOUBLE_EQ(c, 1.0);

  // Back-projection reproduces the truth classes pixel for pixel.
  for (std::size_t i = 0; i < scene_->panoramas.size(); ++i) {
    const auto& t = (*truth_)[i];
    const auto back = mvc::backproject_to_pano(fused, {scene_->panoramas[i].id, t.labels.width, t.labels.height, t.hit_face});
    EXPECT_EQ(back.class_ids, t.labels.class_ids);
    EXPECT_TRUE(back.consistent());
  }
}

}  // namespace
}  // namespace sg3d
