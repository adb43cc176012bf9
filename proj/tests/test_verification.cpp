// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "sg3d/error.hpp"
#include "sg3d/verification.hpp"

namespace sg3d {
namespace {

using nlohmann::json;
using verification::SubmitStatus;
using verification::TaskKind;
using verification::TaskStatus;

std::vector<int> add_box(TriMesh& m, const Vec3& lo, const Vec3& hi) {
  const int base = static_cast<int>(m.vertices.size());
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z()});
  const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  std::vector<int> ids;
  for (const auto& q : quads) {
    ids.push_back(static_cast<int>(m.faces.size()));
    m.faces.push_back({base + q[0], base + q[1], base + q[2]});
    ids.push_back(static_cast<int>(m.faces.size()));
    m.faces.push_back({base + q[0], base + q[2], base + q[3]});
  }
  return ids;
}

// A room with three labeled boxes and one unlabeled box, one panorama.
class ReviewScene : public ::testing::Test {
 protected:
  ReviewScene() {
    add_box(mesh, {0, 0, 0}, {8, 8, 3});
    const std::vector<std::pair<Vec3, Vec3>> boxes = {
        {{5, 1, 0.5}, {6, 2, 1.5}}, {{1, 5, 0.5}, {3, 7, 2.5}}, {{6, 5.5, 0.5}, {6.5, 6.5, 1.3}}};
    int id = 1;
    std::vector<std::vector<int>> owned;
    for (const auto& [lo, hi] : boxes) owned.push_back(add_box(mesh, lo, hi));
    unlabeled_center = Vec3(1.5, 1.5, 1.0);
    add_box(mesh, {1, 1, 0.5}, {2, 2, 1.5});
    mesh.recompute_areas();
    labels = FaceLabelMap(mesh.num_faces());
    const int classes[] = {57, 60, 62};
    for (const auto& faces : owned) {
      for (int f : faces) labels.class_ids[f] = classes[id - 1], labels.instance_ids[f] = id;
      labels.instance_confidence[id] = 0.5 + 0.1 * id;
      ++id;
    }
    std::vector<int> all(mesh.num_faces());
    std::iota(all.begin(), all.end(), 0);
    rooms = {{"r0", all, std::nullopt}};
    pano.id = "p0";
    pano.pose.position = {4, 4, 1.6};
    pano.width = 256;
    pano.height = 128;
    cameras = {graph::camera_from_panorama(pano)};
    bvh = geometry::Bvh::build(mesh);
    hits["p0"] = mvc::cast_panorama(pano, bvh);
    opts.amodal_width = 256;
    task_opts.render_size = 128;
    task_opts.missing_classes = {62, 57};
    graph = graph::build_scene_graph(labels, inputs(), opts);
  }

  graph::GraphInputs inputs() const { return {mesh, bvh, rooms, cameras, vocab}; }
  verification::ApplyContext context() const { return {in_, opts, hits}; }

  verification::Session session() const {
    return verification::Session(verification::make_verification_tasks(graph, {pano}, task_opts), task_opts);
  }

  // Both reviewers give the same answer.
  static void agree(verification::Session& s, const std::string& id, const json& payload) {
    ASSERT_EQ(s.submit(id, "ann", payload).status, SubmitStatus::kRecorded) << id;
    ASSERT_EQ(s.submit(id, "bob", payload).status, SubmitStatus::kResolved) << id;
  }

  // Square polygon of half-size r around the crop pixel a world point maps to.
  json square_around(const verification::TaskView& view, const Vec3& world, double r) const {
    const geometry::ViewProjector proj(view.camera());
    int u = 0, v = 0;
    if (!proj.pixel_of((world - pano.pose.position).normalized(), u, v)) return nullptr;
    return json::array({{u - r, v - r}, {u + r, v - r}, {u + r, v + r}, {u - r, v + r}});
  }

  TriMesh mesh;
  FaceLabelMap labels;
  Vec3 unlabeled_center;
  std::vector<meshio::RoomAnnotation> rooms;
  meshio::Panorama pano;
  std::vector<graph::CameraNode> cameras;
  geometry::Bvh bvh;
  detector::ClassVocabulary vocab = detector::ClassVocabulary::coco();
  std::map<std::string, mvc::PanoramaHits> hits;
  graph::GraphOptions opts;
  verification::TaskOptions task_opts;
  graph::SceneGraph graph;

 private:
  graph::GraphInputs in_{mesh, bvh, rooms, cameras, vocab};
};

TEST_F(ReviewScene, TaskInventory) {
  const auto tasks = verification::make_verification_tasks(graph, {pano}, task_opts);
  ASSERT_EQ(tasks.size(), 3u + 10u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(tasks[i].kind, TaskKind::kVerifyLabel);
    EXPECT_EQ(tasks[i].object_id, i + 1);
    EXPECT_EQ(tasks[i].view.camera_id, "p0");
    EXPECT_GE(tasks[i].view.fov, 30.0);
    EXPECT_LE(tasks[i].view.fov, 120.0);
  }
  EXPECT_EQ(tasks[3].id, "missing/p0/57/0");
  EXPECT_EQ(tasks[12].id, "missing/p0/62/4");
  EXPECT_EQ(tasks[4].view.yaw, 72.0);
  EXPECT_EQ(tasks[6].view.yaw, -144.0);
  task_opts.missing_classes.clear();
  EXPECT_EQ(verification::make_verification_tasks(graph, {pano}, task_opts).size(), 3u);
}

TEST_F(ReviewScene, CropCentersOnTheObject) {
  for (const auto& o : graph.objects) {
    const auto view = verification::object_view(graph, o, task_opts);
    const geometry::ViewProjector proj(view.camera());
    int u = 0, v = 0;
    ASSERT_TRUE(proj.pixel_of((o.location - pano.pose.position).normalized(), u, v)) << o.id;
    EXPECT_NEAR(u, 64, 24) << o.id;
    EXPECT_NEAR(v, 64, 24) << o.id;
  }
}

TEST_F(ReviewScene, CropUsesCameraWithMostVisiblePixels) {
  // A second panorama right next to object 1 sees it much larger.
  meshio::Panorama near = pano;
  near.id = "p1";
  near.pose.position = {5.5, 3.0, 1.0};
  cameras.push_back(graph::camera_from_panorama(near));
  const auto g = graph::build_scene_graph(labels, inputs(), opts);
  for (const auto& o : g.objects) {
    std::map<std::string, int> visible;
    for (const auto& e : g.edges)
      if (e.kind == graph::EdgeKind::kAmodalMask && e.endpoints[0] == graph::object_ref(o.id))
        visible[e.endpoints[1].substr(7)] = e.payload["visible_pixels"].get<int>();
    const std::string want = visible["p1"] > visible["p0"] ? "p1" : "p0";
    EXPECT_EQ(verification::object_view(g, o, task_opts).camera_id, want) << o.id;
  }
  EXPECT_EQ(verification::object_view(g, *g.find_object(1), task_opts).camera_id, "p1");
}

// ---------------------------------------------------------------------------
// Polygons.

bool pnpoly(const verification::Polygon& poly, double x, double y) {
  bool c = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if (((poly[i].y() > y) != (poly[j].y() > y)) &&
        (x < (poly[j].x() - poly[i].x()) * (y - poly[i].y()) / (poly[j].y() - poly[i].y()) + poly[i].x()))
      c = !c;
  }
  return c;
}

TEST(Polygon, ScanlineMatchesPnpoly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coord(-5.0, 45.0);
  std::uniform_int_distribution<int> count(3, 9);
  for (int trial = 0; trial < 300; ++trial) {
    verification::Polygon p(count(rng));
    for (auto& v : p) v = Vec2(coord(rng), coord(rng));
    const BinaryMask m = verification::rasterize_polygon(p, 40, 40);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x) ASSERT_EQ(m.at(x, y), pnpoly(p, x + 0.5, y + 0.5)) << trial << " " << x << "," << y;
  }
}

TEST(Polygon, SelfIntersection) {
  EXPECT_FALSE(verification::self_intersecting({{0, 0}, {4, 0}, {4, 4}, {0, 4}}));
  EXPECT_TRUE(verification::self_intersecting({{0, 0}, {4, 4}, {4, 0}, {0, 4}}));
  EXPECT_FALSE(verification::self_intersecting({{0, 0}, {4, 0}, {2, 3}}));
  EXPECT_FALSE(verification::self_intersecting({{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}}));  // concave
  EXPECT_TRUE(verification::self_intersecting({{0, 0}, {6, 0}, {6, 2}, {3, -2}, {0, 2}}));
}

TEST(Polygon, DegenerateFillsNothing) {
  EXPECT_FALSE(verification::rasterize_polygon({{0, 0}, {5, 5}}, 10, 10).any());
  EXPECT_EQ(verification::rasterize_polygon({{0, 0}, {10, 0}, {10, 10}, {0, 10}}, 10, 10).count(), 100u);
}

// ---------------------------------------------------------------------------
// Review state.

TEST_F(ReviewScene, DualReviewResolvesFlagsAndSpawns) {
  auto s = session();
  EXPECT_EQ(s.submit("obj1/label", "ann", {{"correct", true}}).status, SubmitStatus::kRecorded);
  EXPECT_EQ(s.submit("obj1/label", "ann", {{"correct", false}}).status, SubmitStatus::kDuplicate);
  EXPECT_EQ(s.submit("obj1/label", "", {{"correct", false}}).status, SubmitStatus::kInvalid);
  EXPECT_EQ(s.submit("obj1/label", "bob", {{"correct", "yes"}}).status, SubmitStatus::kInvalid);
  EXPECT_EQ(s.submit("obj1/label", "bob", {{"correct", false}}).status, SubmitStatus::kFlagged);
  EXPECT_EQ(s.find("obj1/label")->status, TaskStatus::kFlagged);
  EXPECT_EQ(s.find("obj1/mask"), nullptr);
  EXPECT_EQ(s.submit("obj1/label", "cyd", {{"correct", true}}).status, SubmitStatus::kResolved);
  EXPECT_EQ(s.find("obj1/label")->resolution, (json{{"correct", true}}));
  EXPECT_EQ(s.submit("obj1/label", "dee", {{"correct", true}}).status, SubmitStatus::kClosed);
  EXPECT_EQ(s.submit("nope", "ann", {{"correct", true}}).status, SubmitStatus::kNotFound);

  ASSERT_NE(s.find("obj1/mask"), nullptr);
  agree(s, "obj1/mask", {{"accept", false}, {"reason", "loose"}});
  ASSERT_NE(s.find("obj1/draw"), nullptr);
  EXPECT_EQ(s.submit("obj1/draw", "ann", {{"polygon", {{0, 0}, {9, 9}, {9, 0}, {0, 9}}}}).status,
            SubmitStatus::kInvalid);

  // Rejected labels spawn nothing.
  agree(s, "obj2/label", {{"correct", false}});
  EXPECT_EQ(s.find("obj2/mask"), nullptr);
}

TEST_F(ReviewScene, NextTaskSkipsAnsweredOnes) {
  auto s = session();
  EXPECT_EQ(s.next_for("ann")->id, "obj1/label");
  s.submit("obj1/label", "ann", {{"correct", true}});
  EXPECT_EQ(s.next_for("ann")->id, "obj2/label");
  EXPECT_EQ(s.next_for("bob")->id, "obj1/label");
  s.submit("obj1/label", "bob", {{"correct", true}});
  EXPECT_EQ(s.next_for("cyd")->id, "obj2/label");
}

TEST_F(ReviewScene, PolygonAgreementUsesIoU) {
  const json a = {{"polygon", {{10, 10}, {50, 10}, {50, 50}, {10, 50}}}};
  const json b = {{"polygon", {{12, 10}, {52, 10}, {52, 50}, {12, 50}}}};
  const json c = {{"polygon", {{60, 60}, {90, 60}, {90, 90}, {60, 90}}}};
  EXPECT_TRUE(verification::answers_agree(TaskKind::kDrawMask, a, b, 128, 0.5));
  EXPECT_FALSE(verification::answers_agree(TaskKind::kDrawMask, a, c, 128, 0.5));
  const json none = {{"instances", json::array()}};
  const json one = {{"instances", {a}}};
  EXPECT_TRUE(verification::answers_agree(TaskKind::kFindMissing, none, none, 128, 0.5));
  EXPECT_FALSE(verification::answers_agree(TaskKind::kFindMissing, none, one, 128, 0.5));
}

TEST_F(ReviewScene, SessionJsonRoundTrip) {
  auto s = session();
  agree(s, "obj1/label", {{"correct", true}});
  s.submit("obj1/mask", "ann", {{"accept", true}});
  const auto j = s.to_json();
  EXPECT_EQ(verification::Session::from_json(j).to_json(), j);
  EXPECT_EQ(verification::Session::from_json(j).tasks().size(), s.tasks().size());
}

// ---------------------------------------------------------------------------
// Applying answers.

TEST_F(ReviewScene, RejectRemovesNodeAndIncidentEdges) {
  auto s = session();
  agree(s, "obj2/label", {{"correct", false}});
  FaceLabelMap edited = labels;
  const auto report = verification::apply_verification(s, graph, edited, context());
  EXPECT_EQ(report.removed, (std::set<int>{2}));
  EXPECT_EQ(report.tasks_applied, 1);
  EXPECT_EQ(graph.find_object(2), nullptr);
  for (const auto& e : graph.edges)
    for (const auto& end : e.endpoints) EXPECT_NE(end, "object:2");
  for (const auto& [id, m] : graph.amodal_masks) EXPECT_EQ(id.find("object:2,"), std::string::npos);
  EXPECT_EQ(graph::to_json(graph).dump(), graph::to_json(graph::build_scene_graph(edited, inputs(), opts)).dump());
  // Applying again does nothing.
  const auto before = graph::to_json(graph).dump();
  EXPECT_EQ(verification::apply_verification(s, graph, edited, context()).tasks_applied, 0);
  EXPECT_EQ(graph::to_json(graph).dump(), before);
}

TEST_F(ReviewScene, AcceptAllIsNoOp) {
  auto s = session();
  const auto before = graph::to_json(graph).dump();
  for (int id = 1; id <= 3; ++id) {
    agree(s, "obj" + std::to_string(id) + "/label", {{"correct", true}});
    agree(s, "obj" + std::to_string(id) + "/mask", {{"accept", true}});
  }
  for (const auto& t : session().tasks())
    if (t.kind == TaskKind::kFindMissing) agree(s, t.id, {{"instances", json::array()}});
  FaceLabelMap edited = labels;
  const auto report = verification::apply_verification(s, graph, edited, context());
  EXPECT_EQ(report.tasks_applied, 6 + 10);
  EXPECT_TRUE(report.removed.empty() && report.updated.empty() && report.created.empty());
  EXPECT_EQ(edited, labels);
  EXPECT_EQ(graph::to_json(graph).dump(), before);
}

TEST_F(ReviewScene, RedrawEqualsFullRebuild) {
  auto s = session();
  agree(s, "obj3/label", {{"correct", true}});
  agree(s, "obj3/mask", {{"accept", false}});
  const auto* draw = s.find("obj3/draw");
  ASSERT_NE(draw, nullptr);
  const json poly = square_around(draw->view, graph.find_object(3)->location, 6);
  ASSERT_FALSE(poly.is_null());
  agree(s, "obj3/draw", {{"polygon", poly}});
  FaceLabelMap edited = labels;
  const auto report = verification::apply_verification(s, graph, edited, context());
  EXPECT_EQ(report.updated, (std::set<int>{3}));
  EXPECT_NE(edited, labels);
  EXPECT_TRUE(edited.consistent());
  EXPECT_EQ(graph::to_json(graph).dump(), graph::to_json(graph::build_scene_graph(edited, inputs(), opts)).dump());
}

TEST_F(ReviewScene, FindMissingCreatesObject) {
  auto s = session();
  std::string task_id;
  json poly;
  for (const auto& t : s.tasks()) {
    if (t.kind != TaskKind::kFindMissing || t.class_id != 62) continue;
    poly = square_around(t.view, unlabeled_center, 14);
    if (!poly.is_null()) {
      task_id = t.id;
      break;
    }
  }
  ASSERT_FALSE(task_id.empty());
  agree(s, task_id, {{"instances", {{{"polygon", poly}}}}});
  FaceLabelMap edited = labels;
  const auto report = verification::apply_verification(s, graph, edited, context());
  ASSERT_EQ(report.created, (std::set<int>{4}));
  ASSERT_NE(graph.find_object(4), nullptr);
  EXPECT_EQ(graph.find_object(4)->class_id, 62);
  EXPECT_LT((graph.find_object(4)->location - unlabeled_center).norm(), 0.6);
  EXPECT_EQ(graph::to_json(graph).dump(), graph::to_json(graph::build_scene_graph(edited, inputs(), opts)).dump());
}

TEST(Faces, UnderMaskNeedsHalfTheirPixels) {
  mvc::PanoramaHits hits{"p", 4, 1, {0, 0, 1, -1}};
  EXPECT_EQ(verification::faces_under_mask({1, 0, 0, 1}, hits, 2), (std::vector<int>{0}));
  EXPECT_EQ(verification::faces_under_mask({0, 0, 0, 1}, hits, 2), (std::vector<int>{}));
  EXPECT_THROW((void)verification::faces_under_mask({1}, hits, 2), Error);
}

}  // namespace
}  // namespace sg3d
