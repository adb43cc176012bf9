// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/mvc.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "sg3d/error.hpp"
#include "sg3d/geometry/projection.hpp"
#include "sg3d/parallel.hpp"

namespace sg3d::mvc {

PanoramaHits cast_panorama(const meshio::Panorama& pano, const geometry::Bvh& bvh, int threads) {
  PanoramaHits hits;
  hits.pano_id = pano.id;
  hits.width = pano.width;
  hits.height = pano.height;
  const auto dirs = geometry::pano_directions(pano.width, pano.height);
  hits.face.assign(dirs.size(), -1);
  parallel_for(static_cast<std::size_t>(pano.height), threads, [&](std::size_t row) {
    const std::size_t base = row * pano.width;
    for (int u = 0; u < pano.width; ++u) {
      const auto hit = bvh.raycast(pano.pose.position, pano.pose.rotation * dirs[base + u]);
      if (hit) hits.face[base + u] = hit->face_id;
    }
  });
  return hits;
}

PanoramaVotes project_labels_to_faces(const LabelMap2D& labels, const meshio::Panorama& pano,
                                      const PanoramaHits& hits, const TriMesh& mesh) {
  if (labels.width != hits.width || labels.height != hits.height) {
    throw Error(ErrorCode::kDimensionMismatch, "label map and hit map sizes differ for " + pano.id);
  }
  auto inv_dist = [&](int f) {
    return 1.0 / std::max((pano.pose.position - mesh.face_center(f)).norm(), kMinFaceDistance);
  };
  std::vector<std::tuple<int, int, int>> labeled;  // face, group, class
  std::vector<int> observed_faces;
  for (std::size_t p = 0; p < hits.face.size(); ++p) {
    const int f = hits.face[p];
    if (f < 0) continue;
    observed_faces.push_back(f);
    if (labels.class_ids[p] > 0) labeled.emplace_back(f, labels.instance_ids[p], labels.class_ids[p]);
  }
  std::sort(labeled.begin(), labeled.end());
  std::sort(observed_faces.begin(), observed_faces.end());

  PanoramaVotes out;
  out.pano_id = pano.id;
  for (std::size_t i = 0; i < labeled.size();) {
    std::size_t j = i;
    while (j < labeled.size() && labeled[j] == labeled[i]) ++j;
    const auto [f, g, c] = labeled[i];
    const int n = static_cast<int>(j - i);
    out.votes.push_back({f, c, g, n, n * inv_dist(f)});
    i = j;
  }
  for (std::size_t i = 0; i < observed_faces.size();) {
    std::size_t j = i;
    while (j < observed_faces.size() && observed_faces[j] == observed_faces[i]) ++j;
    const int f = observed_faces[i];
    const int n = static_cast<int>(j - i);
    out.observed.push_back({f, n, n * inv_dist(f)});
    i = j;
  }
  return out;
}

PanoramaVotes project_labels_to_faces(const LabelMap2D& labels, const meshio::Panorama& pano,
                                      const geometry::Bvh& bvh, const TriMesh& mesh) {
  return project_labels_to_faces(labels, pano, cast_panorama(pano, bvh), mesh);
}

namespace {

void sort_by_pano(std::vector<PanoramaVotes>& votes) {
  std::sort(votes.begin(), votes.end(),
            [](const PanoramaVotes& a, const PanoramaVotes& b) { return a.pano_id < b.pano_id; });
}

// Per-face (class, value) sums in CSR form, accumulated in input order.
struct ClassSums {
  std::vector<int> offsets;
  std::vector<std::pair<int, double>> entries;  // sorted by class within a face

  ClassSums(std::size_t num_faces, std::vector<std::tuple<int, int, double>> items) {
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    offsets.assign(num_faces + 1, 0);
    for (std::size_t i = 0; i < items.size();) {
      const auto [f, c, w0] = items[i];
      double sum = 0.0;
      std::size_t j = i;
      for (; j < items.size() && std::get<0>(items[j]) == f && std::get<1>(items[j]) == c; ++j)
        sum += std::get<2>(items[j]);
      entries.emplace_back(c, sum);
      ++offsets[f + 1];
      i = j;
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  }

  // Heaviest class, lowest class id on ties; 0 when none.
  int best(int f) const {
    int cls = 0;
    double w = 0.0;
    for (int i = offsets[f]; i < offsets[f + 1]; ++i) {
      if (entries[i].second > w) {
        w = entries[i].second;
        cls = entries[i].first;
      }
    }
    return cls;
  }

  double value(int f, int cls) const {
    for (int i = offsets[f]; i < offsets[f + 1]; ++i)
      if (entries[i].first == cls) return entries[i].second;
    return 0.0;
  }
};

int mode_lowest(const std::map<int, int>& counts) {
  int mode = 0, best = 0;
  for (const auto& [cls, n] : counts) {
    if (cls != 0 && n > best) {
      best = n;
      mode = cls;
    }
  }
  return mode;
}

void fill_holes(FaceLabelMap& labels, std::vector<double>& support, const TriMesh& mesh) {
  const MeshAdjacency adj(mesh);
  const auto before = labels.class_ids;
  std::map<int, int> counts;
  for (std::size_t f = 0; f < before.size(); ++f) {
    if (before[f] != 0) continue;
    const auto nb = adj.neighbors(static_cast<int>(f));
    if (nb.empty()) continue;
    counts.clear();
    for (int n : nb)
      if (before[n] != 0) ++counts[before[n]];
    const int cls = mode_lowest(counts);
    if (cls != 0 && 2 * counts[cls] > static_cast<int>(nb.size())) {
      labels.class_ids[f] = cls;
      support[f] = 0.0;
    }
  }
}

}  // namespace

FaceAggregate aggregate_face_labels(std::vector<PanoramaVotes> votes, const TriMesh& mesh,
                                    const AggregateOptions& options) {
  sort_by_pano(votes);
  const std::size_t nf = mesh.num_faces();
  std::vector<std::tuple<int, int, double>> items;
  std::vector<double> observed(nf, 0.0);
  for (const auto& pv : votes) {
    for (const auto& v : pv.votes) {
      if (v.face_id < 0 || static_cast<std::size_t>(v.face_id) >= nf) {
        throw Error(ErrorCode::kOutOfRange, "vote on face " + std::to_string(v.face_id));
      }
      items.emplace_back(v.face_id, v.class_id, v.weight);
    }
    for (const auto& o : pv.observed) observed[o.face_id] += o.weight;
  }
  const ClassSums sums(nf, std::move(items));
  std::vector<int> stage1(nf, 0);
  for (std::size_t f = 0; f < nf; ++f) stage1[f] = sums.best(static_cast<int>(f));

  struct Group {
    int pano;
    int group;
    int cls;
    double total = 0.0;
    std::vector<int> faces;
  };
  std::vector<Group> groups;
  for (std::size_t pi = 0; pi < votes.size(); ++pi) {
    std::map<std::pair<int, int>, std::size_t> index;
    for (const auto& v : votes[pi].votes) {
      auto [it, inserted] = index.try_emplace({v.group_id, v.class_id}, groups.size());
      if (inserted) groups.push_back({static_cast<int>(pi), v.group_id, v.class_id, 0.0, {}});
      auto& g = groups[it->second];
      g.total += v.weight;
      if (g.faces.empty() || g.faces.back() != v.face_id) g.faces.push_back(v.face_id);
    }
  }
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.total != b.total) return a.total > b.total;
    return std::tie(a.pano, a.group, a.cls) < std::tie(b.pano, b.group, b.cls);
  });

  FaceAggregate out;
  out.labels = FaceLabelMap(nf);
  out.support.assign(nf, 0.0);
  std::vector<char> taken(nf, 0);
  std::map<int, int> counts;
  for (const auto& g : groups) {
    counts.clear();
    for (int f : g.faces) ++counts[stage1[f]];
    const int cls = mode_lowest(counts);
    if (cls == 0) continue;
    for (int f : g.faces) {
      if (taken[f]) continue;
      taken[f] = 1;
      out.labels.class_ids[f] = cls;
    }
  }
  for (std::size_t f = 0; f < nf; ++f) {
    const int cls = out.labels.class_ids[f];
    if (cls != 0 && observed[f] > 0.0) out.support[f] = sums.value(static_cast<int>(f), cls) / observed[f];
  }
  if (options.fill_holes) fill_holes(out.labels, out.support, mesh);
  return out;
}

FaceAggregate project_without_consistency(std::vector<PanoramaVotes> votes, const TriMesh& mesh) {
  sort_by_pano(votes);
  const std::size_t nf = mesh.num_faces();
  std::vector<std::tuple<int, int, double>> ballots;  // one per (panorama, face)
  std::vector<std::tuple<int, int, double>> pixels;
  std::vector<double> observed(nf, 0.0);
  for (const auto& pv : votes) {
    std::vector<std::tuple<int, int, double>> local;
    for (const auto& v : pv.votes) {
      local.emplace_back(v.face_id, v.class_id, static_cast<double>(v.pixels));
      pixels.emplace_back(v.face_id, v.class_id, static_cast<double>(v.pixels));
    }
    const ClassSums per_pano(nf, std::move(local));
    for (std::size_t f = 0; f < nf; ++f) {
      const int cls = per_pano.best(static_cast<int>(f));
      if (cls != 0) ballots.emplace_back(static_cast<int>(f), cls, 1.0);
    }
    for (const auto& o : pv.observed) observed[o.face_id] += o.pixels;
  }
  const ClassSums tally(nf, std::move(ballots));
  const ClassSums pixel_sums(nf, std::move(pixels));
  FaceAggregate out;
  out.labels = FaceLabelMap(nf);
  out.support.assign(nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    const int cls = tally.best(static_cast<int>(f));
    out.labels.class_ids[f] = cls;
    if (cls != 0 && observed[f] > 0.0) out.support[f] = pixel_sums.value(static_cast<int>(f), cls) / observed[f];
  }
  return out;
}

FaceLabelMap extract_instances_3d(const FaceLabelMap& class_map, const TriMesh& mesh,
                                  const MeshAdjacency& adjacency) {
  const std::size_t nf = class_map.size();
  if (nf != mesh.num_faces()) throw Error(ErrorCode::kDimensionMismatch, "face label count differs from mesh");
  std::vector<int> comp(nf, -1);
  struct Comp {
    int first;
    double area;
  };
  std::vector<Comp> comps;
  std::vector<int> stack;
  for (std::size_t s = 0; s < nf; ++s) {
    const int cls = class_map.class_ids[s];
    if (cls == 0 || comp[s] >= 0) continue;
    const int cid = static_cast<int>(comps.size());
    comps.push_back({static_cast<int>(s), 0.0});
    std::vector<int> members;
    comp[s] = cid;
    stack.assign(1, static_cast<int>(s));
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      members.push_back(f);
      for (int n : adjacency.neighbors(f)) {
        if (comp[n] < 0 && class_map.class_ids[n] == cls) {
          comp[n] = cid;
          stack.push_back(n);
        }
      }
    }
    std::sort(members.begin(), members.end());
    for (int f : members) comps[cid].area += mesh.face_areas[f];
  }
  std::vector<int> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (comps[a].area != comps[b].area) return comps[a].area > comps[b].area;
    return comps[a].first < comps[b].first;
  });
  std::vector<int> id_of(comps.size());
  for (std::size_t r = 0; r < order.size(); ++r) id_of[order[r]] = static_cast<int>(r) + 1;
  FaceLabelMap out(nf);
  out.class_ids = class_map.class_ids;
  for (std::size_t f = 0; f < nf; ++f)
    if (comp[f] >= 0) out.instance_ids[f] = id_of[comp[f]];
  return out;
}

void score_instances_3d(FaceLabelMap& labels, const std::vector<double>& support, const TriMesh& mesh) {
  std::map<int, std::pair<double, double>> acc;
  std::map<int, std::pair<double, int>> plain;
  for (std::size_t f = 0; f < labels.size(); ++f) {
    const int inst = labels.instance_ids[f];
    if (inst == 0) continue;
    acc[inst].first += mesh.face_areas[f] * support[f];
    acc[inst].second += mesh.face_areas[f];
    plain[inst].first += support[f];
    ++plain[inst].second;
  }
  labels.instance_confidence.clear();
  for (const auto& [inst, a] : acc) {
    labels.instance_confidence[inst] =
        a.second > 0.0 ? a.first / a.second : plain[inst].first / plain[inst].second;
  }
}

LabelMap2D backproject_to_pano(const FaceLabelMap& labels, const PanoramaHits& hits) {
  LabelMap2D out(hits.width, hits.height);
  for (std::size_t p = 0; p < hits.face.size(); ++p) {
    const int f = hits.face[p];
    if (f < 0) continue;
    out.class_ids[p] = labels.class_ids.at(f);
    out.instance_ids[p] = labels.instance_ids[f];
  }
  for (int inst : out.instance_ids) {
    if (inst == 0 || out.instance_confidence.count(inst)) continue;
    const auto it = labels.instance_confidence.find(inst);
    out.instance_confidence[inst] = it != labels.instance_confidence.end() ? it->second : 0.0;
  }
  return out;
}

LabelMap2D backproject_to_pano(const FaceLabelMap& labels, const meshio::Panorama& pano,
                               const geometry::Bvh& bvh) {
  return backproject_to_pano(labels, cast_panorama(pano, bvh));
}

}  // namespace sg3d::mvc
