// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "sg3d/detector.hpp"
#include "sg3d/geometry/projection.hpp"
#include "sg3d/labels.hpp"
#include "sg3d/mask.hpp"

namespace sg3d::framing {

/// One rectilinear view of a panorama, in degrees. Square frames.
struct ViewSpec {
  double yaw = 0.0;
  double pitch = 0.0;
  double fov = 90.0;
  int size = 800;

  /// Camera in the panorama frame (or the world, given the panorama pose).
  geometry::RectCamera camera(const Pose& pose = {}) const;
  std::string view_id(const std::string& pano_id) const;

  friend bool operator==(const ViewSpec&, const ViewSpec&) = default;
};

/// Inclusive ranges; every step must divide its range.
struct GridParams {
  double yaw_min = -180.0, yaw_max = 180.0, yaw_step = 15.0;
  double pitch_min = -15.0, pitch_max = 15.0, pitch_step = 15.0;
  double fov_min = 75.0, fov_max = 105.0, fov_step = 15.0;
  int size = 800;
};

struct ViewGrid {
  std::vector<ViewSpec> views;  // yaw-major, then pitch, then fov

  std::size_t size() const { return views.size(); }
  /// Grid index of the view within 1e-6 degrees, -1 when absent.
  int find(double yaw, double pitch, double fov) const;
};

/// Throws kConfig when a step does not divide its range or a value is out
/// of bounds. Defaults give 25 x 3 x 3 = 225 views.
ViewGrid sample_view_grid(const GridParams& params = {});
/// Six non-overlapping 90 degree cube-face views.
ViewGrid baseline_grid(int size = 800);

enum class Connectivity { kFour, kEight };

/// A detection placed in its view and transferred onto the panorama.
struct ViewDetection {
  int id = 0;    // canonical index within the panorama
  int view = 0;  // grid index
  int class_id = 0;
  double score = 0.0;
  BinaryMask mask;
  double weight = 0.0;         // score / max(1 px, |C_d - C_j|)
  std::vector<int> footprint;  // panorama pixels, ascending
};

/// Splits records by the panorama id of their view id.
std::map<std::string, std::vector<detector::DetectionRecord>> group_by_panorama(
    const std::vector<detector::DetectionRecord>& records);

/// Maps the records of one panorama onto grid views and sorts them
/// canonically: view index, class, score descending, then mask content.
/// Throws kNotFound for a record outside `pano_id` or outside the grid, and
/// kDimensionMismatch when a mask is not view-sized.
std::vector<ViewDetection> prepare_detections(const std::vector<detector::DetectionRecord>& records,
                                              const std::string& pano_id, const ViewGrid& grid);

/// Fills weight and footprint. A panorama pixel belongs to the footprint when
/// its center direction lands inside the mask. Parallel over views.
void compute_footprints(std::vector<ViewDetection>& detections, const ViewGrid& grid, int pano_width,
                        int pano_height, int threads = 1);

/// Per-pixel class weights over the classes that occur in the detections.
class PixelWeightField {
 public:
  PixelWeightField() = default;
  PixelWeightField(int width, int height, std::vector<int> classes);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<int>& classes() const { return classes_; }
  /// -1 for a class that never occurs.
  int class_index(int class_id) const;

  double weight(std::size_t pixel, int class_id) const;
  double at(std::size_t pixel, int class_index) const { return w_[pixel * classes_.size() + class_index]; }
  void add(std::size_t pixel, int class_index, double value) { w_[pixel * classes_.size() + class_index] += value; }
  double total(std::size_t pixel) const;
  /// Highest-weight class, lowest id on ties; 0 when every weight is zero.
  int argmax(std::size_t pixel) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> classes_;
  std::vector<double> w_;
};

/// Sums detection weights over footprints in canonical detection order.
PixelWeightField accumulate_votes(const std::vector<ViewDetection>& detections, int pano_width,
                                  int pano_height);

/// Detection-level assignment: each detection, taken by score descending then
/// id, labels its still-free footprint pixels (nonzero weight only) with the
/// mode of their per-pixel argmax classes. Instance ids are left at 0.
LabelMap2D assign_panorama_labels(const PixelWeightField& field,
                                  const std::vector<ViewDetection>& detections);

/// Per-class connected components with wrap-around across the yaw seam.
/// Instances are numbered by descending size, ties by first pixel in raster
/// order. Confidences are left empty.
LabelMap2D extract_instances_2d(const LabelMap2D& class_map, Connectivity connectivity = Connectivity::kFour);

/// Instance confidence: over the instance's pixels, the summed weight x score
/// of votes for its class divided by the summed weight of all votes. Lies in
/// [0, 1]; lower when competing classes or low scores contribute.
void score_instances(LabelMap2D& labels, const std::vector<ViewDetection>& detections);

struct FramingOptions {
  Connectivity connectivity = Connectivity::kFour;
  int threads = 1;
};

/// prepare -> footprints -> votes -> assignment -> components -> scores.
LabelMap2D run_framing(const std::vector<detector::DetectionRecord>& records, const std::string& pano_id,
                       const ViewGrid& grid, int pano_width, int pano_height,
                       const FramingOptions& options = {});

/// Reference without voting: every detection footprint becomes its own
/// instance with the detection's class and score; higher scores claim
/// contested pixels first.
LabelMap2D baseline_overlay(const std::vector<ViewDetection>& detections, int pano_width, int pano_height);

}  // namespace sg3d::framing
