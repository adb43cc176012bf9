// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/detector.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sg3d::detector {

using nlohmann::json;

ClassVocabulary::ClassVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty() || names_[0] != "background") {
    throw Error(ErrorCode::kConfig, "vocabulary must start with 'background' at id 0");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw Error(ErrorCode::kConfig, "duplicate class name '" + n + "'");
  }
}

ClassVocabulary ClassVocabulary::coco() {
  return ClassVocabulary({
      "background", "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck",
      "boat", "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat",
      "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "backpack",
      "umbrella", "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball",
      "kite", "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket",
      "bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple",
      "sandwich", "orange", "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair",
      "couch", "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote",
      "keyboard", "cell phone", "microwave", "oven", "toaster", "sink", "refrigerator", "book",
      "clock", "vase", "scissors", "teddy bear", "hair drier", "toothbrush"});
}

ClassVocabulary ClassVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return ClassVocabulary(json::parse(in).get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

const std::string& ClassVocabulary::name(int id) const {
  if (id < 0 || id >= static_cast<int>(names_.size())) {
    throw Error(ErrorCode::kUnknownClass, "class id " + std::to_string(id));
  }
  return names_[id];
}

std::optional<int> ClassVocabulary::id(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

namespace {

std::string fmt_deg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v == 0.0 ? 0.0 : v);
  return buf;
}

double parse_deg(const std::string& s, const std::string& view_id) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kFormat, "malformed view id '" + view_id + "'");
  }
  return v;
}

}  // namespace

std::string ViewKey::to_string() const {
  return pano_id + "@" + fmt_deg(yaw) + "," + fmt_deg(pitch) + "," + fmt_deg(fov);
}

ViewKey ViewKey::parse(const std::string& view_id) {
  const auto at = view_id.rfind('@');
  if (at == std::string::npos || at == 0) {
    throw Error(ErrorCode::kFormat, "malformed view id '" + view_id + "'");
  }
  ViewKey key;
  key.pano_id = view_id.substr(0, at);
  const std::string rest = view_id.substr(at + 1);
  const auto c1 = rest.find(',');
  const auto c2 = c1 == std::string::npos ? c1 : rest.find(',', c1 + 1);
  if (c2 == std::string::npos || rest.find(',', c2 + 1) != std::string::npos) {
    throw Error(ErrorCode::kFormat, "malformed view id '" + view_id + "'");
  }
  key.yaw = parse_deg(rest.substr(0, c1), view_id);
  key.pitch = parse_deg(rest.substr(c1 + 1, c2 - c1 - 1), view_id);
  key.fov = parse_deg(rest.substr(c2 + 1), view_id);
  return key;
}

json rle_to_json(const Rle& rle) {
  return {{"counts", rle.counts}, {"size", {rle.height, rle.width}}};
}

Rle rle_from_json(const json& j) {
  try {
    Rle rle;
    const auto& size = j.at("size");
    if (!size.is_array() || size.size() != 2) throw Error(ErrorCode::kMalformedRle, "size must be [h, w]");
    rle.height = size[0].get<int>();
    rle.width = size[1].get<int>();
    const auto& counts = j.at("counts");
    if (!counts.is_array()) {
      throw Error(ErrorCode::kMalformedRle, "counts must be an uncompressed integer array");
    }
    for (const auto& c : counts) {
      if (!c.is_number_integer() || c.get<long long>() < 0) {
        throw Error(ErrorCode::kMalformedRle, "run lengths must be non-negative integers");
      }
      rle.counts.push_back(c.get<std::uint32_t>());
    }
    return rle;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRle, e.what());
  }
}

json detection_to_json(const DetectionRecord& d) {
  return {{"view_id", d.view_id},
          {"class_id", d.class_id},
          {"score", d.score},
          {"rle", rle_to_json(rle_encode(d.mask))}};
}

DetectionLoadResult parse_detections(std::istream& in, const ClassVocabulary& vocabulary,
                                     double threshold) {
  DetectionLoadResult result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kFormat, e.what());
      }
      DetectionRecord d;
      try {
        d.view_id = j.at("view_id").get<std::string>();
        d.class_id = j.at("class_id").get<int>();
        d.score = j.at("score").get<double>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kFormat, e.what());
      }
      ViewKey::parse(d.view_id);
      if (!vocabulary.valid_object_class(d.class_id)) {
        throw Error(ErrorCode::kUnknownClass, "class id " + std::to_string(d.class_id));
      }
      if (!(d.score >= 0.0 && d.score <= 1.0)) {
        throw Error(ErrorCode::kFormat, "score " + std::to_string(d.score) + " outside [0, 1]");
      }
      d.mask = rle_decode(rle_from_json(j.at("rle")));
      if (!d.mask.any()) throw Error(ErrorCode::kMalformedRle, "empty mask");
      if (d.score < threshold) {
        ++result.filtered;
        continue;
      }
      result.records.push_back(std::move(d));
    } catch (const Error& e) {
      result.errors.push_back({line_no, e.code(), e.what()});
    } catch (const json::exception& e) {
      result.errors.push_back({line_no, ErrorCode::kFormat, e.what()});
    }
  }
  return result;
}

DetectionLoadResult load_detections(const std::filesystem::path& path,
                                    const ClassVocabulary& vocabulary, double threshold) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_detections(in, vocabulary, threshold);
}

void save_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& d : records) out << detection_to_json(d).dump() << '\n';
}

int filter_by_score(std::vector<DetectionRecord>& records, double threshold) {
  const auto before = records.size();
  std::erase_if(records, [&](const DetectionRecord& d) { return d.score < threshold; });
  return static_cast<int>(before - records.size());
}

}  // namespace sg3d::detector
