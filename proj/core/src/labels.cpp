// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/labels.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "sg3d/error.hpp"
#include "sg3d/image.hpp"

namespace sg3d {

using nlohmann::json;

namespace {

template <typename Labels>
bool consistent_impl(const Labels& l) {
  std::map<int, int> cls;
  for (std::size_t i = 0; i < l.class_ids.size(); ++i) {
    const int inst = l.instance_ids[i];
    if (inst == 0) continue;
    if (l.class_ids[i] == 0) return false;
    auto [it, inserted] = cls.emplace(inst, l.class_ids[i]);
    if (!inserted && it->second != l.class_ids[i]) return false;
  }
  return true;
}

template <typename Labels>
std::map<int, int> instance_classes_impl(const Labels& l) {
  std::map<int, int> cls;
  for (std::size_t i = 0; i < l.class_ids.size(); ++i)
    if (l.instance_ids[i] != 0) cls.emplace(l.instance_ids[i], l.class_ids[i]);
  return cls;
}

}  // namespace

bool LabelMap2D::consistent() const { return consistent_impl(*this); }
std::map<int, int> LabelMap2D::instance_classes() const { return instance_classes_impl(*this); }
bool FaceLabelMap::consistent() const { return consistent_impl(*this); }
std::map<int, int> FaceLabelMap::instance_classes() const { return instance_classes_impl(*this); }

std::map<int, std::vector<int>> FaceLabelMap::instance_faces() const {
  std::map<int, std::vector<int>> out;
  for (std::size_t f = 0; f < instance_ids.size(); ++f)
    if (instance_ids[f] != 0) out[instance_ids[f]].push_back(static_cast<int>(f));
  return out;
}

void export_label_map(const std::filesystem::path& stem, const LabelMap2D& labels,
                      const std::vector<std::string>& class_names) {
  Gray16Image cls(labels.width, labels.height, 1), inst(labels.width, labels.height, 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.class_ids[i] > std::numeric_limits<std::uint16_t>::max() ||
        labels.instance_ids[i] > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::kOutOfRange, "label id exceeds 16-bit export range");
    }
    cls.data()[i] = static_cast<std::uint16_t>(labels.class_ids[i]);
    inst.data()[i] = static_cast<std::uint16_t>(labels.instance_ids[i]);
  }
  write_png16(stem.string() + "_class.png", cls);
  write_png16(stem.string() + "_instance.png", inst);
  json side = {{"width", labels.width}, {"height", labels.height}};
  json instances = json::object();
  for (const auto& [id, c] : labels.instance_classes()) {
    json e = {{"class_id", c}};
    if (c >= 0 && c < static_cast<int>(class_names.size())) e["class_name"] = class_names[c];
    if (auto it = labels.instance_confidence.find(id); it != labels.instance_confidence.end())
      e["confidence"] = it->second;
    instances[std::to_string(id)] = e;
  }
  side["instances"] = instances;
  std::ofstream out(stem.string() + ".json");
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + stem.string() + ".json");
  out << side.dump(2) << '\n';
}

LabelMap2D import_label_map(const std::filesystem::path& stem) {
  const Gray16Image cls = read_png16(stem.string() + "_class.png");
  const Gray16Image inst = read_png16(stem.string() + "_instance.png");
  if (cls.width() != inst.width() || cls.height() != inst.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "class/instance images differ in size");
  }
  LabelMap2D labels(cls.width(), cls.height());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels.class_ids[i] = cls.data()[i];
    labels.instance_ids[i] = inst.data()[i];
  }
  std::ifstream in(stem.string() + ".json");
  if (in) {
    const json side = json::parse(in);
    for (const auto& [id, e] : side.at("instances").items())
      if (e.contains("confidence")) labels.instance_confidence[std::stoi(id)] = e["confidence"].get<double>();
  }
  return labels;
}

json face_labels_to_json(const FaceLabelMap& labels) {
  json j = json::object();
  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (labels.class_ids[f] == 0 && labels.instance_ids[f] == 0) continue;
    j[std::to_string(f)] = {labels.class_ids[f], labels.instance_ids[f]};
  }
  return j;
}

FaceLabelMap face_labels_from_json(const json& j, std::size_t num_faces) {
  if (!j.is_object()) throw Error(ErrorCode::kFormat, "face labels must be a JSON object");
  FaceLabelMap labels(num_faces);
  for (const auto& [key, value] : j.items()) {
    std::size_t pos = 0;
    long f = -1;
    try {
      f = std::stol(key, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != key.size() || f < 0 || static_cast<std::size_t>(f) >= num_faces) {
      throw Error(ErrorCode::kOutOfRange, "face id '" + key + "' out of range");
    }
    if (!value.is_array() || value.size() != 2) {
      throw Error(ErrorCode::kFormat, "face " + key + " must map to [class_id, instance_id]");
    }
    labels.class_ids[f] = value[0].get<int>();
    labels.instance_ids[f] = value[1].get<int>();
  }
  return labels;
}

json confidences_to_json(const std::map<int, double>& conf) {
  json j = json::object();
  for (const auto& [id, c] : conf) j[std::to_string(id)] = c;
  return j;
}

std::map<int, double> confidences_from_json(const json& j) {
  std::map<int, double> out;
  for (const auto& [k, v] : j.items()) out[std::stoi(k)] = v.get<double>();
  return out;
}

}  // namespace sg3d
