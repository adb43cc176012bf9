// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <limits>

namespace sg3d {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid camera placement. `rotation` maps camera-frame vectors into the
/// world frame. Camera frame: +x right, +y forward, +z up (world is z-up).
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();

  /// Throws kInvalidPose unless | |q| - 1 | <= 1e-9.
  void validate() const;

  Vec3 to_world(const Vec3& camera_point) const {
    return rotation * camera_point + position;
  }
  Vec3 to_camera(const Vec3& world_point) const {
    return rotation.conjugate() * (world_point - position);
  }
};

/// Normalizes a quaternion read from a file. Rejects anything further than
/// `tolerance` from unit norm instead of silently renormalizing it.
Quat checked_unit_quaternion(const Quat& q, double tolerance = 1e-3);

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return empty() ? Vec3::Zero() : Vec3(max - min); }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p, double eps = 0.0) const {
    return (p.array() >= min.array() - eps).all() &&
           (p.array() <= max.array() + eps).all();
  }
};

}  // namespace sg3d
