// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <unordered_map>

#include "sg3d/error.hpp"
#include "sg3d/hash.hpp"
#include "sg3d/parallel.hpp"

namespace sg3d::synthetic {

namespace {

using geometry::RectCamera;

// Builds a mesh one surface at a time. Vertices are shared within a group
// (one object, or the building shell) by quantized position so that grid
// patches meeting along an edge become edge-adjacent.
class MeshBuilder {
 public:
  explicit MeshBuilder(TriMesh& mesh) : mesh_(mesh) {}

  void begin_group() { index_.clear(); }

  int vertex(const Vec3& p) {
    const std::array<long long, 3> key{std::llround(p.x() * 1e6), std::llround(p.y() * 1e6),
                                       std::llround(p.z() * 1e6)};
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(mesh_.vertices.size()));
    if (inserted) mesh_.vertices.push_back(p);
    return it->second;
  }

  // Quad patch p0 + s*eu + t*ev, s,t in [0,1], tessellated nu x nv. Faces
  // are oriented along eu x ev. Returns the new face ids.
  std::vector<int> grid(const Vec3& p0, const Vec3& eu, const Vec3& ev, double step) {
    const int nu = std::max(1, static_cast<int>(std::ceil(eu.norm() / step - 1e-9)));
    const int nv = std::max(1, static_cast<int>(std::ceil(ev.norm() / step - 1e-9)));
    std::vector<int> ids((nu + 1) * (nv + 1));
    for (int j = 0; j <= nv; ++j)
      for (int i = 0; i <= nu; ++i)
        ids[j * (nu + 1) + i] = vertex(p0 + eu * (static_cast<double>(i) / nu) +
                                       ev * (static_cast<double>(j) / nv));
    std::vector<int> faces;
    for (int j = 0; j < nv; ++j) {
      for (int i = 0; i < nu; ++i) {
        const int a = ids[j * (nu + 1) + i], b = ids[j * (nu + 1) + i + 1];
        const int c = ids[(j + 1) * (nu + 1) + i + 1], d = ids[(j + 1) * (nu + 1) + i];
        faces.push_back(add_face(a, b, c));
        faces.push_back(add_face(a, c, d));
      }
    }
    return faces;
  }

  int add_face(int a, int b, int c) {
    mesh_.faces.push_back({a, b, c});
    return static_cast<int>(mesh_.faces.size()) - 1;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::array<long long, 3>& k) const {
      return static_cast<std::size_t>(
          hash_combine(hash_combine(static_cast<std::uint64_t>(k[0]), static_cast<std::uint64_t>(k[1])),
                       static_cast<std::uint64_t>(k[2])));
    }
  };
  TriMesh& mesh_;
  std::unordered_map<std::array<long long, 3>, int, KeyHash> index_;
};

struct RoomBox {
  double x0, x1, depth;
};

Vec3 rotz(const Vec3& p, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z()};
}

std::vector<int> add_box(MeshBuilder& mb, const Vec3& center, double a, double b, double h,
                         double yaw, double step) {
  auto world = [&](double x, double y, double z) { return rotz(Vec3(x, y, z), yaw) + center; };
  auto dir = [&](double x, double y, double z) { return rotz(Vec3(x, y, z), yaw); };
  std::vector<int> faces;
  auto append = [&](std::vector<int> f) { faces.insert(faces.end(), f.begin(), f.end()); };
  mb.begin_group();
  append(mb.grid(world(-a, -b, h), dir(2 * a, 0, 0), dir(0, 2 * b, 0), step));
  append(mb.grid(world(-a, -b, 0), dir(2 * a, 0, 0), dir(0, 0, h), step));
  append(mb.grid(world(a, b, 0), dir(-2 * a, 0, 0), dir(0, 0, h), step));
  append(mb.grid(world(a, -b, 0), dir(0, 2 * b, 0), dir(0, 0, h), step));
  append(mb.grid(world(-a, b, 0), dir(0, -2 * b, 0), dir(0, 0, h), step));
  return faces;
}

std::vector<int> add_prism(MeshBuilder& mb, const Vec3& center, int sides, double radius,
                           double h, double yaw, double step) {
  std::vector<Vec3> ring;
  for (int i = 0; i < sides; ++i) {
    const double ang = yaw + 2.0 * std::numbers::pi * i / sides;
    ring.push_back(center + Vec3(radius * std::cos(ang), radius * std::sin(ang), 0.0));
  }
  std::vector<int> faces;
  mb.begin_group();
  std::vector<int> top_ring;
  for (int i = 0; i < sides; ++i) {
    const Vec3& p = ring[i];
    const Vec3 e = ring[(i + 1) % sides] - p;
    auto f = mb.grid(p, e, Vec3(0, 0, h), step);
    faces.insert(faces.end(), f.begin(), f.end());
    const int nu = std::max(1, static_cast<int>(std::ceil(e.norm() / step - 1e-9)));
    for (int k = 0; k < nu; ++k) top_ring.push_back(mb.vertex(p + e * (static_cast<double>(k) / nu) + Vec3(0, 0, h)));
  }
  const int apex = mb.vertex(center + Vec3(0, 0, h));
  for (std::size_t k = 0; k < top_ring.size(); ++k)
    faces.push_back(mb.add_face(apex, top_ring[k], top_ring[(k + 1) % top_ring.size()]));
  return faces;
}

struct Layout {
  TriMesh mesh;
  std::vector<meshio::RoomAnnotation> rooms;
  std::vector<meshio::Panorama> panoramas;
  std::vector<ObjectTruth> objects;
  std::vector<int> face_object;
};

std::optional<Layout> make_layout(std::uint64_t attempt_seed, const SceneParams& p) {
  Rng rng(attempt_seed);
  Layout out;
  MeshBuilder mb(out.mesh);
  const int num_rooms = rng.uniform_int(p.min_rooms, p.max_rooms);
  const double depth = rng.uniform(4.0, 5.5);
  const double height = p.wall_height;
  std::vector<RoomBox> boxes;
  double x = 0.0;
  for (int r = 0; r < num_rooms; ++r) {
    const double w = rng.uniform(3.5, 5.5);
    boxes.push_back({x, x + w, depth});
    x += w;
  }

  std::vector<std::vector<int>> room_faces(num_rooms);
  auto add_to = [&](int r, const std::vector<int>& f) {
    room_faces[r].insert(room_faces[r].end(), f.begin(), f.end());
  };
  mb.begin_group();
  for (int r = 0; r < num_rooms; ++r) {
    const auto& b = boxes[r];
    const double w = b.x1 - b.x0;
    add_to(r, mb.grid({b.x0, 0, 0}, {w, 0, 0}, {0, depth, 0}, p.surface_step));
    add_to(r, mb.grid({b.x0, 0, height}, {0, depth, 0}, {w, 0, 0}, p.surface_step));
    add_to(r, mb.grid({b.x1, 0, 0}, {-w, 0, 0}, {0, 0, height}, p.surface_step));
    add_to(r, mb.grid({b.x0, depth, 0}, {w, 0, 0}, {0, 0, height}, p.surface_step));
    if (r == 0) add_to(r, mb.grid({b.x0, 0, 0}, {0, depth, 0}, {0, 0, height}, p.surface_step));
    if (r == num_rooms - 1) {
      add_to(r, mb.grid({b.x1, depth, 0}, {0, -depth, 0}, {0, 0, height}, p.surface_step));
    } else {
      // Partial wall with a full-height opening between rooms r and r+1.
      const double open_w = rng.uniform(1.4, 2.2);
      const double o0 = rng.uniform(0.4, depth - 0.4 - open_w);
      const double o1 = o0 + open_w;
      for (auto [lo, hi] : {std::pair{0.0, o0}, std::pair{o1, depth}}) {
        add_to(r, mb.grid({b.x1, hi, 0}, {0, lo - hi, 0}, {0, 0, height}, p.surface_step));
        add_to(r + 1, mb.grid({b.x1, lo, 0}, {0, hi - lo, 0}, {0, 0, height}, p.surface_step));
      }
    }
  }
  const std::size_t structure_faces = out.mesh.faces.size();

  // Cameras.
  std::vector<Vec3> cams;
  int pano_counter = 0;
  for (int r = 0; r < num_rooms; ++r) {
    const auto& b = boxes[r];
    for (int k = 0; k < p.panos_per_room; ++k) {
      bool placed = false;
      for (int t = 0; t < 200 && !placed; ++t) {
        const Vec3 c(rng.uniform(b.x0 + 0.7, b.x1 - 0.7), rng.uniform(0.7, depth - 0.7),
                     rng.uniform(p.camera_height_min, p.camera_height_max));
        bool ok = true;
        for (const auto& o : cams) ok = ok && (c - o).head<2>().norm() >= 1.6;
        if (!ok) continue;
        cams.push_back(c);
        meshio::Panorama pano;
        char id[32];
        std::snprintf(id, sizeof id, "pano_%02d", pano_counter++);
        pano.id = id;
        pano.pose.position = c;
        pano.pose.rotation = Quat(Eigen::AngleAxisd(rng.uniform(-std::numbers::pi, std::numbers::pi),
                                                    Vec3::UnitZ()));
        pano.width = p.pano_width;
        pano.height = p.pano_width / 2;
        out.panoramas.push_back(std::move(pano));
        placed = true;
      }
      if (!placed) return std::nullopt;
    }
  }

  // Objects.
  const int num_objects = rng.uniform_int(p.min_objects, p.max_objects);
  std::vector<double> cumulative;
  double total_area = 0.0;
  for (const auto& b : boxes) cumulative.push_back(total_area += (b.x1 - b.x0) * depth);
  std::vector<std::pair<Vec3, double>> placed_objects;
  out.face_object.assign(structure_faces, 0);
  for (int i = 0; i < num_objects; ++i) {
    const double pick = rng.uniform(0.0, total_area);
    const int r = static_cast<int>(std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                                   cumulative.begin());
    const auto& b = boxes[std::min(r, num_rooms - 1)];
    const bool is_box = rng.bernoulli(0.6);
    const double ha = rng.uniform(0.2, 0.6), hb = rng.uniform(0.2, 0.6);
    const double prism_r = rng.uniform(0.25, 0.55);
    const int sides = rng.uniform_int(3, 8);
    const double h = rng.uniform(0.4, p.max_object_height);
    const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const int cls = p.classes[rng.uniform_int(0, static_cast<int>(p.classes.size()) - 1)];
    const double radius = is_box ? std::hypot(ha, hb) : prism_r;
    std::optional<Vec3> center;
    for (int t = 0; t < 200 && !center; ++t) {
      const Vec3 c(rng.uniform(b.x0 + radius + 0.15, b.x1 - radius - 0.15),
                   rng.uniform(radius + 0.15, depth - radius - 0.15), 0.0);
      bool ok = b.x1 - b.x0 > 2 * radius + 0.3;
      for (const auto& cam : cams) ok = ok && (c - cam).head<2>().norm() >= p.camera_clearance + radius;
      for (const auto& [oc, orad] : placed_objects)
        ok = ok && (c - oc).head<2>().norm() >= radius + orad + p.object_gap;
      if (ok) center = c;
    }
    if (!center) continue;
    placed_objects.emplace_back(*center, radius);
    ObjectTruth obj;
    obj.id = static_cast<int>(out.objects.size()) + 1;
    obj.class_id = cls;
    obj.center = *center + Vec3(0, 0, 0.5 * h);
    obj.footprint_radius = radius;
    obj.face_ids = is_box ? add_box(mb, *center, ha, hb, h, yaw, p.object_step)
                          : add_prism(mb, *center, sides, prism_r, h, yaw, p.object_step);
    std::sort(obj.face_ids.begin(), obj.face_ids.end());
    add_to(std::min(r, num_rooms - 1), obj.face_ids);
    out.face_object.resize(out.mesh.faces.size(), obj.id);
    out.objects.push_back(std::move(obj));
  }
  if (static_cast<int>(out.objects.size()) < p.min_objects) return std::nullopt;

  for (auto& o : out.objects) {
    char id[16];
    const auto r = std::find_if(room_faces.begin(), room_faces.end(), [&](const auto& f) {
      return std::find(f.begin(), f.end(), o.face_ids.front()) != f.end();
    });
    std::snprintf(id, sizeof id, "room_%d", static_cast<int>(r - room_faces.begin()));
    o.room_id = id;
  }
  for (int r = 0; r < num_rooms; ++r) {
    meshio::RoomAnnotation room;
    char id[16];
    std::snprintf(id, sizeof id, "room_%d", r);
    room.room_id = id;
    room.face_ids = room_faces[r];
    std::sort(room.face_ids.begin(), room.face_ids.end());
    out.rooms.push_back(std::move(room));
  }
  out.mesh.recompute_areas();
  return out;
}

std::array<std::uint8_t, 3> class_color(int cls) {
  const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(cls) * 7919u);
  return {static_cast<std::uint8_t>(64 + (h & 0x7f)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0x7f)),
          static_cast<std::uint8_t>(64 + ((h >> 16) & 0x7f))};
}

bool observed_patches_connected(const SyntheticScene& scene, const std::vector<char>& observed) {
  const MeshAdjacency adj(scene.mesh);
  std::vector<char> seen(scene.mesh.num_faces(), 0);
  for (const auto& obj : scene.objects) {
    std::vector<int> faces;
    for (int f : obj.face_ids)
      if (observed[f]) faces.push_back(f);
    if (faces.empty()) return false;
    std::vector<int> stack{faces.front()};
    seen[faces.front()] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      ++reached;
      for (int n : adj.neighbors(f)) {
        if (!seen[n] && observed[n] && scene.face_object[n] == obj.id) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
    if (reached != faces.size()) return false;
  }
  return true;
}

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, const SceneParams& params) {
  if (params.pano_width <= 0 || params.pano_width % 2 != 0) {
    throw Error(ErrorCode::kConfig, "pano_width must be positive and even");
  }
  if (params.classes.size() < 2) throw Error(ErrorCode::kConfig, "need at least two object classes");
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    auto layout = make_layout(hash_combine(seed, static_cast<std::uint64_t>(attempt)), params);
    if (!layout) continue;
    SyntheticScene scene;
    scene.seed = seed;
    scene.accepted_attempt = static_cast<std::uint64_t>(attempt);
    scene.mesh = std::move(layout->mesh);
    scene.rooms = std::move(layout->rooms);
    scene.panoramas = std::move(layout->panoramas);
    scene.objects = std::move(layout->objects);
    scene.face_object = std::move(layout->face_object);
    scene.face_class.assign(scene.mesh.num_faces(), 0);
    for (std::size_t f = 0; f < scene.face_object.size(); ++f)
      if (scene.face_object[f] > 0) scene.face_class[f] = scene.objects[scene.face_object[f] - 1].class_id;

    const auto bvh = geometry::Bvh::build(scene.mesh);
    const auto truth = render_all_truth(scene, bvh, 0);
    const auto observed = observed_faces(scene, truth);
    std::vector<std::size_t> pixels(scene.objects.size() + 1, 0);
    for (const auto& t : truth)
      for (int id : t.object_ids) ++pixels[id];
    bool enough = true;
    for (const auto& o : scene.objects) enough = enough && pixels[o.id] >= 20;
    if (enough && observed_patches_connected(scene, observed)) return scene;
  }
  throw Error(ErrorCode::kConfig, "no acceptable synthetic layout for seed " + std::to_string(seed));
}

PanoramaTruth render_truth(const SyntheticScene& scene, const geometry::Bvh& bvh,
                           std::size_t pano_index) {
  const auto& pano = scene.panoramas.at(pano_index);
  const int w = pano.width, h = pano.height;
  const auto dirs = geometry::pano_directions(w, h);
  PanoramaTruth t;
  t.hit_face.assign(dirs.size(), -1);
  t.object_ids.assign(dirs.size(), 0);
  t.labels = LabelMap2D(w, h);
  t.image = RgbImage(w, h, 3);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Vec3 d = pano.pose.rotation * dirs[i];
    const auto hit = bvh.raycast(pano.pose.position, d);
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    if (!hit) continue;
    t.hit_face[i] = hit->face_id;
    const int obj = scene.face_object[hit->face_id];
    t.object_ids[i] = obj;
    if (obj > 0) {
      t.labels.class_ids[i] = scene.face_class[hit->face_id];
      t.labels.instance_ids[i] = obj;
    }
    const Vec3 n = scene.mesh.face_normal(hit->face_id);
    std::array<std::uint8_t, 3> base{200, 200, 190};
    if (obj > 0) base = class_color(scene.face_class[hit->face_id]);
    else if (n.z() > 0.9) base = {150, 120, 90};
    else if (n.z() < -0.9) base = {235, 235, 235};
    const double shade = 0.35 + 0.65 * std::abs(n.dot(d));
    for (int c = 0; c < 3; ++c) t.image.at(x, y, c) = static_cast<std::uint8_t>(std::lround(base[c] * shade));
  }
  for (const auto& [inst, cls] : t.labels.instance_classes()) t.labels.instance_confidence[inst] = 1.0;
  return t;
}

std::vector<PanoramaTruth> render_all_truth(const SyntheticScene& scene, const geometry::Bvh& bvh,
                                            int threads) {
  std::vector<PanoramaTruth> out(scene.panoramas.size());
  parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = render_truth(scene, bvh, i); });
  return out;
}

std::vector<char> observed_faces(const SyntheticScene& scene, const std::vector<PanoramaTruth>& truth) {
  std::vector<char> observed(scene.mesh.num_faces(), 0);
  for (const auto& t : truth)
    for (int f : t.hit_face)
      if (f >= 0) observed[f] = 1;
  return observed;
}

FaceLabelMap truth_face_labels(const SyntheticScene& scene, const std::vector<char>& observed) {
  FaceLabelMap labels(scene.mesh.num_faces());
  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (!observed[f] || scene.face_object[f] == 0) continue;
    labels.class_ids[f] = scene.face_class[f];
    labels.instance_ids[f] = scene.face_object[f];
  }
  for (const auto& o : scene.objects) labels.instance_confidence[o.id] = 1.0;
  std::erase_if(labels.instance_confidence, [&](const auto& kv) {
    return std::none_of(labels.instance_ids.begin(), labels.instance_ids.end(),
                        [&](int id) { return id == kv.first; });
  });
  return labels;
}

NoiseParams NoiseParams::zero() {
  NoiseParams n;
  n.drop_prob = 0.0;
  n.truncated_drop_prob = 0.0;
  n.morph_radius = 0;
  n.truncated_confusion_prob = 0.0;
  n.false_positive_prob = 0.0;
  n.consistent_confusion_prob = 0.0;
  n.score_min = 1.0;
  n.score_max = 1.0;
  n.min_pixels = 1;
  return n;
}

SyntheticDetector::SyntheticDetector(const SyntheticScene& scene, const std::vector<PanoramaTruth>& truth,
                                     NoiseParams noise, std::uint64_t seed)
    : scene_(scene), truth_(truth), noise_(noise), seed_(seed) {
  if (truth.size() != scene.panoramas.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one truth map per panorama required");
  }
  std::set<int> cls;
  for (const auto& o : scene.objects) cls.insert(o.class_id);
  if (cls.size() < 2) {
    const SceneParams defaults;
    cls.insert(defaults.classes.begin(), defaults.classes.end());
  }
  classes_.assign(cls.begin(), cls.end());
}

int SyntheticDetector::confused_class(int true_class, std::uint64_t key) const {
  std::vector<int> others;
  for (int c : classes_)
    if (c != true_class) others.push_back(c);
  return others[splitmix64(key) % others.size()];
}

std::shared_ptr<const SyntheticDetector::Table> SyntheticDetector::table(const RectCamera& cam,
                                                                         double residual_yaw) const {
  const auto key = std::make_tuple(cam.width, cam.height, cam.pitch_deg, cam.fov_deg, residual_yaw);
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  RectCamera c = cam;
  c.yaw_deg = residual_yaw;
  const Mat3 rot = c.view_to_pano();
  const int pw = scene_.panoramas.front().width, ph = scene_.panoramas.front().height;
  auto t = std::make_shared<Table>();
  t->u.resize(static_cast<std::size_t>(c.width) * c.height);
  t->v.resize(t->u.size());
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      const auto [u, v] = geometry::dir_to_pano_index(rot * c.pixel_dir_view(x, y), pw, ph);
      t->u[static_cast<std::size_t>(y) * c.width + x] = u;
      t->v[static_cast<std::size_t>(y) * c.width + x] = v;
    }
  }
  std::lock_guard lock(cache_mutex_);
  return cache_.try_emplace(key, std::move(t)).first->second;
}

std::vector<detector::DetectionRecord> SyntheticDetector::detect(std::size_t pano_index,
                                                                 const RectCamera& cam) const {
  cam.validate();
  const auto& pano = scene_.panoramas.at(pano_index);
  const auto& truth = truth_.at(pano_index);
  const int pw = pano.width;
  // Yaw enters only as a longitude shift; whole-pixel shifts reuse one table.
  const double shift_f = std::round(cam.yaw_deg * pw / 360.0);
  double residual = cam.yaw_deg - shift_f * 360.0 / pw;
  if (std::abs(residual) < 1e-9) residual = 0.0;
  const int shift = static_cast<int>(shift_f);
  const auto tab = table(cam, residual);

  const int w = cam.width, h = cam.height;
  const std::size_t n_obj = scene_.objects.size();
  std::vector<int> ids(static_cast<std::size_t>(w) * h);
  std::vector<PixelBox> boxes(n_obj + 1, PixelBox{w, h, 0, 0});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t q = static_cast<std::size_t>(y) * w + x;
      int u = (tab->u[q] + shift) % pw;
      if (u < 0) u += pw;
      const int id = truth.object_ids[static_cast<std::size_t>(tab->v[q]) * pw + u];
      ids[q] = id;
      if (id == 0) continue;
      auto& b = boxes[id];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }

  const std::string view_id = detector::ViewKey{pano.id, cam.yaw_deg, cam.pitch_deg, cam.fov_deg}.to_string();
  const std::uint64_t view_key = hash_combine(seed_, fnv1a(view_id));
  const std::uint64_t pano_key = hash_combine(seed_, fnv1a(pano.id));
  std::vector<detector::DetectionRecord> out;
  for (const auto& obj : scene_.objects) {
    const PixelBox& b = boxes[obj.id];
    if (b.empty()) continue;
    BinaryMask mask(w, h, b);
    for (int y = b.y0; y < b.y1; ++y)
      for (int x = b.x0; x < b.x1; ++x)
        if (ids[static_cast<std::size_t>(y) * w + x] == obj.id) mask.set(x, y);
    const bool truncated = b.x0 == 0 || b.y0 == 0 || b.x1 == w || b.y1 == h;

    Rng rng(hash_combine(view_key, static_cast<std::uint64_t>(obj.id)));
    const bool drop = rng.bernoulli(noise_.drop_prob);
    const bool trunc_drop = rng.bernoulli(noise_.truncated_drop_prob);
    const bool trunc_confuse = rng.bernoulli(noise_.truncated_confusion_prob);
    const bool fp = rng.bernoulli(noise_.false_positive_prob);
    const double score = rng.uniform(noise_.score_min, noise_.score_max);
    if (drop || (truncated && trunc_drop)) continue;

    int cls = obj.class_id;
    const std::uint64_t obj_pano = hash_combine(pano_key, static_cast<std::uint64_t>(obj.id));
    const double dist = (obj.center - pano.pose.position).head<2>().norm();
    const double ramp = std::clamp((dist - noise_.confusion_near_m) /
                                       std::max(1e-9, noise_.confusion_far_m - noise_.confusion_near_m),
                                   0.0, 1.0);
    // Boundary and class errors follow the object's appearance from this
    // panorama, so they repeat across overlapping views.
    Rng consistent(obj_pano);
    const int radius =
        noise_.morph_radius > 0 ? consistent.uniform_int(-noise_.morph_radius, noise_.morph_radius) : 0;
    if (consistent.bernoulli(noise_.consistent_confusion_prob * ramp)) {
      cls = confused_class(obj.class_id, consistent.next());
    } else if (truncated && trunc_confuse) {
      cls = confused_class(obj.class_id, rng.next());
    }

    if (radius != 0) mask = morph(mask, radius);
    mask.shrink_to_fit();
    if (static_cast<int>(mask.count()) < std::max(1, noise_.min_pixels)) continue;

    detector::DetectionRecord rec{view_id, cls, score, mask};
    out.push_back(rec);
    if (truncated && fp) {
      int fp_cls = confused_class(cls, rng.next());
      out.push_back({view_id, fp_cls, score * noise_.false_positive_score_factor, std::move(mask)});
    }
  }
  return out;
}

std::vector<detector::DetectionRecord> synthetic_detect(const SyntheticScene& scene,
                                                        const std::vector<PanoramaTruth>& truth,
                                                        std::size_t pano_index, const RectCamera& cam,
                                                        const NoiseParams& noise, std::uint64_t seed) {
  return SyntheticDetector(scene, truth, noise, seed).detect(pano_index, cam);
}

}  // namespace sg3d::synthetic
