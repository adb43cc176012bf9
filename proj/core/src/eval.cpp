// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/eval.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "sg3d/error.hpp"

namespace sg3d::eval {

namespace {

constexpr int kNumThresholds = 10;
constexpr int kNumRecall = 101;

double threshold(int k) { return 0.5 + k * ((0.95 - 0.5) / 9.0); }

double weighted_iou(const std::vector<int>& a, const std::vector<int>& b, const std::vector<double>* w) {
  auto weight = [&](int e) { return w && !w->empty() ? (*w)[e] : 1.0; };
  double inter = 0.0, wa = 0.0, wb = 0.0;
  for (int e : a) wa += weight(e);
  for (int e : b) wb += weight(e);
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      inter += weight(a[i]);
      ++i;
      ++j;
    }
  }
  const double uni = wa + wb - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Score descending; equal scores fall back to element content so the result
// never depends on input order.
bool det_before(const Instance* a, const Instance* b) {
  if (a->score != b->score) return a->score > b->score;
  return a->elements < b->elements;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_delta(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "(%+.3f)", v);
  return buf;
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"AP", m.ap}, {"AP50", m.ap50}, {"AP75", m.ap75}, {"AR", m.ar}};
}

}  // namespace

double iou_2d(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "masks differ in size");
  }
  std::size_t inter = 0, uni = 0;
  const PixelBox ba = a.roi(), bb = b.roi();
  const int x0 = std::min(ba.x0, bb.x0), y0 = std::min(ba.y0, bb.y0);
  const int x1 = std::max(ba.x1, bb.x1), y1 = std::max(ba.y1, bb.y1);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const bool pa = a.at(x, y), pb = b.at(x, y);
      inter += pa && pb;
      uni += pa || pb;
    }
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double iou_3d(std::span<const int> a, std::span<const int> b, std::span<const double> face_areas) {
  std::vector<int> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  const std::vector<double> w(face_areas.begin(), face_areas.end());
  return weighted_iou(sa, sb, &w);
}

Metrics evaluate(const std::vector<Instance>& predictions, const std::vector<Instance>& ground_truth,
                 const std::vector<std::vector<double>>& element_weights, const EvalParams& params) {
  std::set<int> categories;
  for (const auto& g : ground_truth) categories.insert(g.class_id);
  if (categories.empty()) return {};

  // (category, image) -> instances
  std::map<std::pair<int, int>, std::vector<const Instance*>> dts, gts;
  std::set<int> images;
  for (const auto& d : predictions) {
    dts[{d.class_id, d.image}].push_back(&d);
    images.insert(d.image);
  }
  for (const auto& g : ground_truth) {
    gts[{g.class_id, g.image}].push_back(&g);
    images.insert(g.image);
  }

  double ap_sum = 0.0, ap50_sum = 0.0, ap75_sum = 0.0, ar_sum = 0.0;
  for (int cat : categories) {
    struct Scored {
      double score;
      std::array<bool, kNumThresholds> tp;
    };
    std::vector<Scored> all;
    int npig = 0;
    for (int img : images) {
      std::vector<const Instance*> d;
      if (auto it = dts.find({cat, img}); it != dts.end()) d = it->second;
      std::vector<const Instance*> g;
      if (auto it = gts.find({cat, img}); it != gts.end()) g = it->second;
      npig += static_cast<int>(g.size());
      std::sort(d.begin(), d.end(), det_before);
      if (static_cast<int>(d.size()) > params.max_detections) d.resize(params.max_detections);
      const std::vector<double>* w =
          img >= 0 && img < static_cast<int>(element_weights.size()) ? &element_weights[img] : nullptr;
      std::vector<std::vector<double>> ious(d.size(), std::vector<double>(g.size()));
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) ious[i][j] = weighted_iou(d[i]->elements, g[j]->elements, w);
      std::vector<Scored> local(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) local[i].score = d[i]->score;
      for (int k = 0; k < kNumThresholds; ++k) {
        std::vector<char> gt_matched(g.size(), 0);
        for (std::size_t i = 0; i < d.size(); ++i) {
          double best_iou = std::min(threshold(k), 1.0 - 1e-10);
          int best = -1;
          for (std::size_t j = 0; j < g.size(); ++j) {
            if (gt_matched[j] || ious[i][j] < best_iou) continue;
            best_iou = ious[i][j];
            best = static_cast<int>(j);
          }
          local[i].tp[k] = best >= 0;
          if (best >= 0) gt_matched[best] = 1;
        }
      }
      all.insert(all.end(), local.begin(), local.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
    for (int k = 0; k < kNumThresholds; ++k) {
      const std::size_t nd = all.size();
      std::vector<double> rc(nd), pr(nd);
      double tp = 0.0, fp = 0.0;
      for (std::size_t i = 0; i < nd; ++i) {
        (all[i].tp[k] ? tp : fp) += 1.0;
        rc[i] = npig > 0 ? tp / npig : 0.0;
        pr[i] = tp / (tp + fp);
      }
      const double recall = nd ? rc.back() : 0.0;
      for (std::size_t i = nd; i-- > 1;) pr[i - 1] = std::max(pr[i - 1], pr[i]);
      double q_sum = 0.0;
      for (int r = 0; r < kNumRecall; ++r) {
        const double rt = r * (1.0 / (kNumRecall - 1));
        const auto idx = static_cast<std::size_t>(std::lower_bound(rc.begin(), rc.end(), rt) - rc.begin());
        if (idx < nd) q_sum += pr[idx];
      }
      const double ap_t = q_sum / kNumRecall;
      ap_sum += ap_t;
      ar_sum += recall;
      if (k == 0) ap50_sum += ap_t;
      if (k == 5) ap75_sum += ap_t;
    }
  }
  const double nc = static_cast<double>(categories.size());
  return {ap_sum / (nc * kNumThresholds), ap50_sum / nc, ap75_sum / nc, ar_sum / (nc * kNumThresholds)};
}

std::vector<Instance> instances_from_labels(const LabelMap2D& labels, int image) {
  std::map<int, Instance> by_id;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const int inst = labels.instance_ids[p];
    if (inst == 0) continue;
    auto& ins = by_id[inst];
    ins.image = image;
    ins.class_id = labels.class_ids[p];
    ins.elements.push_back(static_cast<int>(p));
  }
  std::vector<Instance> out;
  for (auto& [id, ins] : by_id) {
    const auto it = labels.instance_confidence.find(id);
    ins.score = it != labels.instance_confidence.end() ? it->second : 1.0;
    out.push_back(std::move(ins));
  }
  return out;
}

std::vector<Instance> instances_from_faces(const FaceLabelMap& labels, int image) {
  std::map<int, Instance> by_id;
  for (std::size_t f = 0; f < labels.size(); ++f) {
    const int inst = labels.instance_ids[f];
    if (inst == 0) continue;
    auto& ins = by_id[inst];
    ins.image = image;
    ins.class_id = labels.class_ids[f];
    ins.elements.push_back(static_cast<int>(f));
  }
  std::vector<Instance> out;
  for (auto& [id, ins] : by_id) {
    const auto it = labels.instance_confidence.find(id);
    ins.score = it != labels.instance_confidence.end() ? it->second : 1.0;
    out.push_back(std::move(ins));
  }
  return out;
}

EvalReport compare_stages(const std::vector<StagePredictions>& stages, const std::vector<Instance>& ground_truth,
                          const std::string& modality, const std::vector<std::vector<double>>& element_weights,
                          const EvalParams& params) {
  EvalReport report;
  report.modality = modality;
  for (const auto& s : stages) {
    StageRow row;
    row.stage = s.stage;
    row.metrics = evaluate(s.predictions, ground_truth, element_weights, params);
    if (!report.rows.empty()) {
      const Metrics& b = report.rows.front().metrics;
      row.delta = Metrics{row.metrics.ap - b.ap, row.metrics.ap50 - b.ap50, row.metrics.ap75 - b.ap75,
                          row.metrics.ar - b.ar};
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"stage", r.stage}, {"metrics", metrics_json(r.metrics)}};
    if (r.delta) j["delta"] = metrics_json(*r.delta);
    rows_json.push_back(std::move(j));
  }
  return {{"modality", modality}, {"rows", rows_json}};
}

std::string EvalReport::to_text() const { return format_reports({*this}); }

std::string format_reports(const std::vector<EvalReport>& reports) {
  std::vector<std::string> stages;
  for (const auto& rep : reports)
    for (const auto& r : rep.rows)
      if (std::find(stages.begin(), stages.end(), r.stage) == stages.end()) stages.push_back(r.stage);

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"stage"};
  for (const auto& rep : reports)
    for (const char* m : {"AP", "AP.50", "AP.75", "AR"}) header.push_back(rep.modality + " " + m);
  table.push_back(header);
  for (const auto& s : stages) {
    std::vector<std::string> line{s};
    for (const auto& rep : reports) {
      const auto it = std::find_if(rep.rows.begin(), rep.rows.end(), [&](const StageRow& r) { return r.stage == s; });
      for (int k = 0; k < 4; ++k) {
        if (it == rep.rows.end()) {
          line.push_back("-");
          continue;
        }
        auto pick = [k](const Metrics& m) { return k == 0 ? m.ap : k == 1 ? m.ap50 : k == 2 ? m.ap75 : m.ar; };
        std::string cell = fmt3(pick(it->metrics));
        if (it->delta) cell += " " + fmt_delta(pick(*it->delta));
        line.push_back(cell);
      }
    }
    table.push_back(line);
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  std::ostringstream out;
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << line[c] << std::string(widths[c] - line[c].size(), ' ');
      out << (c + 1 < line.size() ? "  " : "\n");
    }
  }
  return out.str();
}

}  // namespace sg3d::eval
