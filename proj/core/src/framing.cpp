// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/framing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "sg3d/error.hpp"
#include "sg3d/parallel.hpp"

namespace sg3d::framing {

namespace {

constexpr double kAngleEps = 1e-6;

std::vector<double> inclusive_range(double lo, double hi, double step, const char* axis) {
  if (!(step > 0.0) || hi < lo) {
    throw Error(ErrorCode::kConfig, std::string(axis) + " range or step invalid");
  }
  const double n = (hi - lo) / step;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw Error(ErrorCode::kConfig, std::string(axis) + " step does not divide its range");
  }
  std::vector<double> out;
  for (int i = 0; i <= static_cast<int>(rounded); ++i) out.push_back(lo + i * step);
  return out;
}

bool mask_less(const BinaryMask& a, const BinaryMask& b) {
  const Rle ra = rle_encode(a), rb = rle_encode(b);
  return ra.counts < rb.counts;
}

}  // namespace

geometry::RectCamera ViewSpec::camera(const Pose& pose) const {
  geometry::RectCamera cam;
  cam.pose = pose;
  cam.yaw_deg = yaw;
  cam.pitch_deg = pitch;
  cam.fov_deg = fov;
  cam.width = size;
  cam.height = size;
  return cam;
}

std::string ViewSpec::view_id(const std::string& pano_id) const {
  return detector::ViewKey{pano_id, yaw, pitch, fov}.to_string();
}

int ViewGrid::find(double yaw, double pitch, double fov) const {
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    if (std::abs(v.yaw - yaw) < kAngleEps && std::abs(v.pitch - pitch) < kAngleEps &&
        std::abs(v.fov - fov) < kAngleEps)
      return static_cast<int>(i);
  }
  return -1;
}

ViewGrid sample_view_grid(const GridParams& p) {
  if (p.size <= 0) throw Error(ErrorCode::kConfig, "view size must be positive");
  const auto yaws = inclusive_range(p.yaw_min, p.yaw_max, p.yaw_step, "yaw");
  const auto pitches = inclusive_range(p.pitch_min, p.pitch_max, p.pitch_step, "pitch");
  const auto fovs = inclusive_range(p.fov_min, p.fov_max, p.fov_step, "fov");
  if (pitches.front() < -90.0 || pitches.back() > 90.0) {
    throw Error(ErrorCode::kConfig, "pitch must lie in [-90, 90]");
  }
  if (fovs.front() <= 0.0 || fovs.back() >= 180.0) {
    throw Error(ErrorCode::kConfig, "fov must lie in (0, 180)");
  }
  ViewGrid grid;
  for (double y : yaws)
    for (double pi : pitches)
      for (double f : fovs) grid.views.push_back({y, pi, f, p.size});
  return grid;
}

ViewGrid baseline_grid(int size) {
  ViewGrid grid;
  for (double yaw : {-90.0, 0.0, 90.0, 180.0}) grid.views.push_back({yaw, 0.0, 90.0, size});
  grid.views.push_back({0.0, 90.0, 90.0, size});
  grid.views.push_back({0.0, -90.0, 90.0, size});
  return grid;
}

std::map<std::string, std::vector<detector::DetectionRecord>> group_by_panorama(
    const std::vector<detector::DetectionRecord>& records) {
  std::map<std::string, std::vector<detector::DetectionRecord>> out;
  for (const auto& r : records) out[detector::ViewKey::parse(r.view_id).pano_id].push_back(r);
  return out;
}

std::vector<ViewDetection> prepare_detections(const std::vector<detector::DetectionRecord>& records,
                                              const std::string& pano_id, const ViewGrid& grid) {
  std::vector<ViewDetection> dets;
  dets.reserve(records.size());
  for (const auto& r : records) {
    const auto key = detector::ViewKey::parse(r.view_id);
    const int view = key.pano_id == pano_id ? grid.find(key.yaw, key.pitch, key.fov) : -1;
    if (view < 0) throw Error(ErrorCode::kNotFound, "view '" + r.view_id + "' is not in the grid");
    const int size = grid.views[view].size;
    if (r.mask.width() != size || r.mask.height() != size) {
      throw Error(ErrorCode::kDimensionMismatch, "mask size differs from view size for " + r.view_id);
    }
    ViewDetection d;
    d.view = view;
    d.class_id = r.class_id;
    d.score = r.score;
    d.mask = r.mask;
    dets.push_back(std::move(d));
  }
  std::sort(dets.begin(), dets.end(), [](const ViewDetection& a, const ViewDetection& b) {
    if (a.view != b.view) return a.view < b.view;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    if (a.score != b.score) return a.score > b.score;
    return mask_less(a.mask, b.mask);
  });
  for (std::size_t i = 0; i < dets.size(); ++i) dets[i].id = static_cast<int>(i);
  return dets;
}

void compute_footprints(std::vector<ViewDetection>& detections, const ViewGrid& grid, int pano_width,
                        int pano_height, int threads) {
  geometry::validate_pano_size(pano_width, pano_height);
  std::map<int, std::vector<std::size_t>> by_view;
  for (std::size_t i = 0; i < detections.size(); ++i) by_view[detections[i].view].push_back(i);
  std::vector<std::pair<int, std::vector<std::size_t>>> work(by_view.begin(), by_view.end());
  const auto dirs = geometry::pano_directions(pano_width, pano_height);

  parallel_for(work.size(), threads, [&](std::size_t wi) {
    const auto& [view, members] = work[wi];
    const ViewSpec& spec = grid.views.at(view);
    const auto cam = spec.camera();
    const geometry::ViewProjector proj(cam);
    const double cx = 0.5 * cam.width, cy = 0.5 * cam.height;
    for (std::size_t i : members) {
      auto& d = detections[i];
      const Vec2 c = d.mask.centroid();
      d.weight = d.score / std::max(1.0, std::hypot(c.x() - cx, c.y() - cy));
      d.footprint.clear();
    }
    // Rows whose center latitude can fall inside the frame.
    const double half_diag = std::atan(std::sqrt(2.0) * std::tan(0.5 * spec.fov * std::numbers::pi / 180.0)) *
                             180.0 / std::numbers::pi;
    const double lat_hi = spec.pitch + half_diag + 1e-9, lat_lo = spec.pitch - half_diag - 1e-9;
    for (int v = 0; v < pano_height; ++v) {
      const double lat = 90.0 - (v + 0.5) / pano_height * 180.0;
      if (lat > lat_hi || lat < lat_lo) continue;
      for (int u = 0; u < pano_width; ++u) {
        const std::size_t p = static_cast<std::size_t>(v) * pano_width + u;
        int x, y;
        if (!proj.pixel_of(dirs[p], x, y)) continue;
        for (std::size_t i : members) {
          auto& d = detections[i];
          if (d.mask.at(x, y)) d.footprint.push_back(static_cast<int>(p));
        }
      }
    }
  });
}

PixelWeightField::PixelWeightField(int width, int height, std::vector<int> classes)
    : width_(width), height_(height), classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  w_.assign(static_cast<std::size_t>(width) * height * classes_.size(), 0.0);
}

int PixelWeightField::class_index(int class_id) const {
  const auto it = std::lower_bound(classes_.begin(), classes_.end(), class_id);
  return it != classes_.end() && *it == class_id ? static_cast<int>(it - classes_.begin()) : -1;
}

double PixelWeightField::weight(std::size_t pixel, int class_id) const {
  const int k = class_index(class_id);
  return k < 0 ? 0.0 : at(pixel, k);
}

double PixelWeightField::total(std::size_t pixel) const {
  double s = 0.0;
  for (std::size_t k = 0; k < classes_.size(); ++k) s += at(pixel, static_cast<int>(k));
  return s;
}

int PixelWeightField::argmax(std::size_t pixel) const {
  int best = 0;
  double best_w = 0.0;
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    const double w = at(pixel, static_cast<int>(k));
    if (w > best_w) {
      best_w = w;
      best = classes_[k];
    }
  }
  return best;
}

PixelWeightField accumulate_votes(const std::vector<ViewDetection>& detections, int pano_width,
                                  int pano_height) {
  geometry::validate_pano_size(pano_width, pano_height);
  std::vector<int> classes;
  for (const auto& d : detections) classes.push_back(d.class_id);
  PixelWeightField field(pano_width, pano_height, classes);
  for (const auto& d : detections) {
    const int k = field.class_index(d.class_id);
    for (int p : d.footprint) field.add(static_cast<std::size_t>(p), k, d.weight);
  }
  return field;
}

LabelMap2D assign_panorama_labels(const PixelWeightField& field,
                                  const std::vector<ViewDetection>& detections) {
  LabelMap2D labels(field.width(), field.height());
  std::vector<int> argmax(labels.size());
  std::vector<char> nonzero(labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    argmax[p] = field.argmax(p);
    nonzero[p] = field.total(p) > 0.0;
  }
  std::vector<const ViewDetection*> order;
  for (const auto& d : detections) order.push_back(&d);
  std::sort(order.begin(), order.end(), [](const ViewDetection* a, const ViewDetection* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id < b->id;
  });
  std::vector<char> taken(labels.size(), 0);
  std::map<int, int> counts;
  for (const ViewDetection* d : order) {
    counts.clear();
    for (int p : d->footprint)
      if (argmax[p] > 0) ++counts[argmax[p]];
    int mode = 0, best = 0;
    for (const auto& [cls, n] : counts) {
      if (n > best) {
        best = n;
        mode = cls;
      }
    }
    if (mode == 0) continue;
    for (int p : d->footprint) {
      if (taken[p] || !nonzero[p]) continue;
      taken[p] = 1;
      labels.class_ids[p] = mode;
    }
  }
  return labels;
}

LabelMap2D extract_instances_2d(const LabelMap2D& class_map, Connectivity connectivity) {
  const int w = class_map.width, h = class_map.height;
  LabelMap2D out = class_map;
  std::fill(out.instance_ids.begin(), out.instance_ids.end(), 0);
  out.instance_confidence.clear();
  std::vector<int> component(class_map.size(), -1);
  struct Comp {
    int first;
    std::size_t size;
  };
  std::vector<Comp> comps;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(class_map.size()); ++start) {
    const int cls = class_map.class_ids[start];
    if (cls == 0 || component[start] >= 0) continue;
    const int cid = static_cast<int>(comps.size());
    comps.push_back({start, 0});
    component[start] = cid;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++comps[cid].size;
      const int x = p % w, y = p / w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (connectivity == Connectivity::kFour && dx != 0 && dy != 0) continue;
          const int ny = y + dy;
          if (ny < 0 || ny >= h) continue;
          const int nx = (x + dx + w) % w;
          const int q = ny * w + nx;
          if (component[q] < 0 && class_map.class_ids[q] == cls) {
            component[q] = cid;
            stack.push_back(q);
          }
        }
      }
    }
  }
  std::vector<int> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
    return comps[a].first < comps[b].first;
  });
  std::vector<int> instance_of(comps.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) instance_of[order[rank]] = static_cast<int>(rank) + 1;
  for (std::size_t p = 0; p < out.size(); ++p)
    if (component[p] >= 0) out.instance_ids[p] = instance_of[component[p]];
  return out;
}

void score_instances(LabelMap2D& labels, const std::vector<ViewDetection>& detections) {
  // Pooled over the instance: supporting weight times score, over all weight.
  std::map<int, std::pair<double, double>> acc;
  for (const auto& d : detections) {
    for (int p : d.footprint) {
      const int inst = labels.instance_ids[p];
      if (inst == 0) continue;
      auto& a = acc[inst];
      if (labels.class_ids[p] == d.class_id) a.first += d.weight * d.score;
      a.second += d.weight;
    }
  }
  labels.instance_confidence.clear();
  for (const auto& [inst, a] : acc) labels.instance_confidence[inst] = a.second > 0.0 ? a.first / a.second : 0.0;
}

LabelMap2D run_framing(const std::vector<detector::DetectionRecord>& records, const std::string& pano_id,
                       const ViewGrid& grid, int pano_width, int pano_height, const FramingOptions& options) {
  auto dets = prepare_detections(records, pano_id, grid);
  compute_footprints(dets, grid, pano_width, pano_height, options.threads);
  const auto field = accumulate_votes(dets, pano_width, pano_height);
  auto labels = extract_instances_2d(assign_panorama_labels(field, dets), options.connectivity);
  score_instances(labels, dets);
  return labels;
}

LabelMap2D baseline_overlay(const std::vector<ViewDetection>& detections, int pano_width, int pano_height) {
  geometry::validate_pano_size(pano_width, pano_height);
  LabelMap2D labels(pano_width, pano_height);
  std::vector<const ViewDetection*> order;
  for (const auto& d : detections) order.push_back(&d);
  std::sort(order.begin(), order.end(), [](const ViewDetection* a, const ViewDetection* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id < b->id;
  });
  int next = 1;
  for (const ViewDetection* d : order) {
    bool used = false;
    for (int p : d->footprint) {
      if (labels.class_ids[p] != 0) continue;
      labels.class_ids[p] = d->class_id;
      labels.instance_ids[p] = next;
      used = true;
    }
    if (used) labels.instance_confidence[next++] = d->score;
  }
  return labels;
}

}  // namespace sg3d::framing
