// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "sg3d/meshio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace sg3d::meshio {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void format_error(const std::filesystem::path& path, const std::string& where,
                               const std::string& what) {
  throw Error(ErrorCode::kFormat, path.string() + ":" + where + ": " + what);
}

TriMesh parse_obj(const std::filesystem::path& path, const std::string& text) {
  TriMesh mesh;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) format_error(path, std::to_string(line_no), "bad vertex record");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        int idx = 0;
        auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
        if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0) {
          format_error(path, std::to_string(line_no), "bad face index '" + tok + "'");
        }
        const int n = static_cast<int>(mesh.vertices.size());
        const int resolved = idx > 0 ? idx - 1 : n + idx;
        if (resolved < 0 || resolved >= n) {
          format_error(path, std::to_string(line_no), "face index " + tok + " out of range");
        }
        poly.push_back(resolved);
      }
      if (poly.size() < 3) format_error(path, std::to_string(line_no), "face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
    // vt, vn, o, g, s, usemtl, mtllib: ignored
  }
  return mesh;
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

int type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

double read_scalar(const std::string& t, const char* p) {
  if (t == "char" || t == "int8") return load_le<std::int8_t>(p);
  if (t == "uchar" || t == "uint8") return load_le<std::uint8_t>(p);
  if (t == "short" || t == "int16") return load_le<std::int16_t>(p);
  if (t == "ushort" || t == "uint16") return load_le<std::uint16_t>(p);
  if (t == "int" || t == "int32") return load_le<std::int32_t>(p);
  if (t == "uint" || t == "uint32") return load_le<std::uint32_t>(p);
  if (t == "float" || t == "float32") return load_le<float>(p);
  return load_le<double>(p);
}

TriMesh parse_ply(const std::filesystem::path& path, const std::string& data) {
  const auto header_end = data.find("end_header");
  if (data.rfind("ply", 0) != 0 || header_end == std::string::npos) {
    format_error(path, "offset 0", "missing PLY header");
  }
  std::size_t body = data.find('\n', header_end);
  if (body == std::string::npos) format_error(path, "header", "truncated header");
  ++body;
  std::istringstream hs(data.substr(0, header_end));
  std::string line, format;
  std::vector<PlyElement> elements;
  while (std::getline(hs, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      ls >> format;
    } else if (tag == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) format_error(path, "header", "property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        p.is_list = true;
        ls >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ls >> p.name;
      }
      if (type_size(p.type) == 0 || (p.is_list && type_size(p.count_type) == 0)) {
        format_error(path, "header", "unsupported property type in '" + line + "'");
      }
      elements.back().props.push_back(p);
    }
  }
  if (format != "binary_little_endian" && format != "ascii" && format != "binary_big_endian") {
    format_error(path, "header", "unsupported format " + format);
  }
  if (format == "binary_big_endian") format_error(path, "header", "big-endian PLY not supported");

  TriMesh mesh;
  const bool ascii = format == "ascii";
  std::istringstream as(ascii ? data.substr(body) : std::string());
  std::size_t off = body;
  auto next_value = [&](const std::string& type) -> double {
    if (ascii) {
      double v;
      if (!(as >> v)) format_error(path, "ascii body", "unexpected end of data");
      return v;
    }
    const int sz = type_size(type);
    if (off + sz > data.size()) format_error(path, "offset " + std::to_string(off), "unexpected end of data");
    const double v = read_scalar(type, data.data() + off);
    off += sz;
    return v;
  };
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      Vec3 v = Vec3::Zero();
      std::vector<int> poly;
      for (const auto& p : e.props) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(next_value(p.count_type));
          std::vector<int> items(n);
          for (auto& it : items) it = static_cast<int>(next_value(p.type));
          if (e.name == "face" && (p.name == "vertex_indices" || p.name == "vertex_index")) poly = items;
        } else {
          const double val = next_value(p.type);
          if (e.name == "vertex") {
            if (p.name == "x") v.x() = val;
            if (p.name == "y") v.y() = val;
            if (p.name == "z") v.z() = val;
          }
        }
      }
      if (e.name == "vertex") mesh.vertices.push_back(v);
      if (e.name == "face") {
        if (poly.size() < 3) format_error(path, "face " + std::to_string(i), "face with < 3 vertices");
        for (int idx : poly) {
          if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size())) {
            format_error(path, "face " + std::to_string(i), "vertex index out of range");
          }
        }
        for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
  }
  return mesh;
}

Vec3 json_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kFormat, what + " must be a 3-array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

MeshLoadResult load_mesh(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  MeshLoadResult result;
  if (ext == ".ply" || data.rfind("ply", 0) == 0) {
    result.mesh = parse_ply(path, data);
  } else {
    result.mesh = parse_obj(path, data);
  }
  result.dropped_degenerate = result.mesh.drop_degenerate_faces();
  if (result.mesh.faces.empty()) {
    throw Error(ErrorCode::kEmptyGeometry, path.string() + " has no usable faces");
  }
  return result;
}

void save_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void save_ply(const std::filesystem::path& path, const TriMesh& mesh,
              const std::vector<std::array<std::uint8_t, 3>>* face_colors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.faces.size() << "\n"
      << "property list uchar int vertex_indices\n";
  if (face_colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  auto put = [&](auto v) {
    if constexpr (std::endian::native == std::endian::big) {
      auto* b = reinterpret_cast<unsigned char*>(&v);
      std::reverse(b, b + sizeof(v));
    }
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  for (const auto& v : mesh.vertices) {
    put(v.x());
    put(v.y());
    put(v.z());
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    put(std::uint8_t{3});
    for (int k = 0; k < 3; ++k) put(static_cast<std::int32_t>(mesh.faces[f][k]));
    if (face_colors) {
      for (int c = 0; c < 3; ++c) put((*face_colors)[f][c]);
    }
  }
}

const RgbImage& Panorama::pixels() {
  if (image.empty()) {
    if (image_path.empty()) throw Error(ErrorCode::kNotFound, "panorama " + id + " has no image");
    image = read_rgb_image(image_path);
  }
  return image;
}

PanoramaLoadResult load_panoramas(const std::filesystem::path& dir,
                                  const std::filesystem::path& pose_manifest) {
  json manifest;
  try {
    manifest = json::parse(read_file(pose_manifest));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, pose_manifest.string() + ": " + e.what());
  }
  if (!manifest.is_object()) throw Error(ErrorCode::kFormat, "pose manifest must be an object");
  PanoramaLoadResult result;
  for (const auto& [id, entry] : manifest.items()) {
    try {
      Panorama pano;
      pano.id = id;
      pano.pose.position = json_vec3(entry.at("position"), "position");
      const auto& q = entry.at("quaternion");
      if (!q.is_array() || q.size() != 4) throw Error(ErrorCode::kFormat, "quaternion must be [w,x,y,z]");
      pano.pose.rotation = checked_unit_quaternion(
          Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()));
      std::filesystem::path image;
      if (entry.contains("image")) {
        image = dir / entry["image"].get<std::string>();
      } else if (std::filesystem::exists(dir / (id + ".png"))) {
        image = dir / (id + ".png");
      } else {
        image = dir / (id + ".jpg");
      }
      if (!std::filesystem::exists(image)) {
        throw Error(ErrorCode::kNotFound, "missing image " + image.string());
      }
      const auto [w, h] = read_image_size(image);
      if (h <= 0 || w != 2 * h) {
        throw Error(ErrorCode::kInvalidPanorama,
                    "image " + image.string() + " is " + std::to_string(w) + "x" + std::to_string(h) +
                        ", expected 2:1");
      }
      pano.width = w;
      pano.height = h;
      pano.image_path = image;
      result.panoramas.push_back(std::move(pano));
    } catch (const Error& e) {
      result.errors.push_back({id, e.code(), e.what()});
    } catch (const json::exception& e) {
      result.errors.push_back({id, ErrorCode::kFormat, e.what()});
    }
  }
  std::sort(result.panoramas.begin(), result.panoramas.end(),
            [](const Panorama& a, const Panorama& b) { return a.id < b.id; });
  return result;
}

void save_pose_manifest(const std::filesystem::path& path, const std::vector<Panorama>& panoramas) {
  json j = json::object();
  for (const auto& p : panoramas) {
    const auto& q = p.pose.rotation;
    json e = {{"position", {p.pose.position.x(), p.pose.position.y(), p.pose.position.z()}},
              {"quaternion", {q.w(), q.x(), q.y(), q.z()}}};
    if (!p.image_path.empty()) e["image"] = p.image_path.filename().string();
    j[p.id] = e;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<RoomAnnotation> validate_rooms(std::vector<RoomAnnotation> rooms, std::size_t num_faces) {
  std::map<int, std::string> owner;
  std::sort(rooms.begin(), rooms.end(),
            [](const RoomAnnotation& a, const RoomAnnotation& b) { return a.room_id < b.room_id; });
  for (auto& room : rooms) {
    std::sort(room.face_ids.begin(), room.face_ids.end());
    room.face_ids.erase(std::unique(room.face_ids.begin(), room.face_ids.end()), room.face_ids.end());
    for (int f : room.face_ids) {
      if (f < 0 || static_cast<std::size_t>(f) >= num_faces) {
        throw Error(ErrorCode::kOutOfRange,
                    "room " + room.room_id + " references face " + std::to_string(f) +
                        " (mesh has " + std::to_string(num_faces) + ")");
      }
      auto [it, inserted] = owner.emplace(f, room.room_id);
      if (!inserted) {
        throw Error(ErrorCode::kOverlap, "rooms " + it->second + " and " + room.room_id +
                                             " overlap on face " + std::to_string(f));
      }
    }
  }
  return rooms;
}

std::vector<RoomAnnotation> load_rooms(const std::filesystem::path& path, std::size_t num_faces) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kFormat, path.string() + ": expected an array of rooms");
  std::vector<RoomAnnotation> rooms;
  for (const auto& r : j) {
    RoomAnnotation room;
    try {
      room.room_id = r.at("room_id").get<std::string>();
      room.face_ids = r.at("face_ids").get<std::vector<int>>();
      if (r.contains("scene_category") && !r["scene_category"].is_null()) {
        room.scene_category = r["scene_category"].get<std::string>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
    }
    rooms.push_back(std::move(room));
  }
  return validate_rooms(std::move(rooms), num_faces);
}

void save_rooms(const std::filesystem::path& path, const std::vector<RoomAnnotation>& rooms) {
  json j = json::array();
  for (const auto& r : rooms) {
    json e = {{"room_id", r.room_id}, {"face_ids", r.face_ids}};
    if (r.scene_category) e["scene_category"] = *r.scene_category;
    j.push_back(e);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump() << '\n';
}

}  // namespace sg3d::meshio
