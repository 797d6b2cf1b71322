#pragma once

#include <Eigen/Core>
#include <cmath>

namespace scout {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Shortest signed difference b - a, wrapped to (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(b - a); }

/// Rotation about +z by yaw applied to v.
inline Vec3 rotate_yaw(double yaw, const Vec3& v) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

/// Inverse yaw rotation (global -> sensor frame).
inline Vec3 unrotate_yaw(double yaw, const Vec3& v) { return rotate_yaw(-yaw, v); }

struct Box3d {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return p.x() >= min.x() && p.x() < max.x() && p.y() >= min.y() && p.y() < max.y() &&
           p.z() >= min.z() && p.z() < max.z();
  }
};

/// Axis description of a uniform voxel grid. Shared by the occupancy map and
/// the simulator's ground-truth grid so both use identical indexing.
struct GridGeometry {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.2;
  Vec3i dims = Vec3i::Zero();

  std::int64_t num_voxels() const {
    return static_cast<std::int64_t>(dims.x()) * dims.y() * dims.z();
  }
  bool key_in_bounds(const Vec3i& k) const {
    return k.x() >= 0 && k.x() < dims.x() && k.y() >= 0 && k.y() < dims.y() && k.z() >= 0 &&
           k.z() < dims.z();
  }
  bool point_in_bounds(const Vec3& p) const { return key_in_bounds(key_of_unchecked(p)); }

  // floor((p - origin) / voxel_size), no bounds check
  Vec3i key_of_unchecked(const Vec3& p) const {
    return {static_cast<int>(std::floor((p.x() - origin.x()) / voxel_size)),
            static_cast<int>(std::floor((p.y() - origin.y()) / voxel_size)),
            static_cast<int>(std::floor((p.z() - origin.z()) / voxel_size))};
  }
  Vec3 center_of(const Vec3i& k) const {
    return origin + (k.cast<double>() + Vec3(0.5, 0.5, 0.5).eval()) * voxel_size;
  }
  // x fastest, then y, then z
  std::int64_t linear_index(const Vec3i& k) const {
    return static_cast<std::int64_t>(k.z()) * dims.y() * dims.x() +
           static_cast<std::int64_t>(k.y()) * dims.x() + k.x();
  }
  Vec3i key_of_linear(std::int64_t idx) const {
    const std::int64_t plane = static_cast<std::int64_t>(dims.x()) * dims.y();
    const int z = static_cast<int>(idx / plane);
    const std::int64_t rem = idx % plane;
    return {static_cast<int>(rem % dims.x()), static_cast<int>(rem / dims.x()), z};
  }
  Box3d bounds() const {
    return {origin, origin + dims.cast<double>() * voxel_size};
  }
};

}  // namespace scout
