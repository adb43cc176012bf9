// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the test executables.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sg3d/pipeline.hpp"
#include "sg3d/synthetic.hpp"

namespace sg3d::testing {

/// Small synthetic scene: low panorama resolution keeps ray casting cheap.
inline synthetic::SceneParams small_scene_params() {
  synthetic::SceneParams p;
  p.pano_width = 384;
  p.min_objects = 8;
  p.max_objects = 12;
  return p;
}

/// Pipeline config over a small synthetic scene with a coarse view grid.
inline pipeline::PipelineConfig small_config(std::uint64_t seed, const std::filesystem::path& out) {
  pipeline::PipelineConfig c;
  c.synthetic_seed = seed;
  c.scene = small_scene_params();
  c.grid.size = 200;
  c.out = out;
  c.resume = false;
  c.write_label_images = false;
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sg3d_" + name + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace sg3d::testing
