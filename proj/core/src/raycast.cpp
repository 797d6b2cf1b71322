#include "scout/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scout {

bool clip_segment_to_grid(const GridGeometry& geom, Vec3& a, Vec3& b) {
  const Box3d box = geom.bounds();
  // Keep strictly inside the upper boundary so floor() lands on a valid key.
  const double eps = geom.voxel_size * 1e-9;
  Vec3 lo = box.min, hi = box.max - Vec3(eps, eps, eps).eval();

  double t0 = 0.0, t1 = 1.0;
  const Vec3 d = b - a;
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (a[axis] < lo[axis] || a[axis] > hi[axis]) return false;
      continue;
    }
    double ta = (lo[axis] - a[axis]) / d[axis];
    double tb = (hi[axis] - a[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  const Vec3 na = a + t0 * d;
  const Vec3 nb = a + t1 * d;
  a = na;
  b = nb;
  return true;
}

void traverse(const GridGeometry& geom, const Vec3& origin, const Vec3& end,
              std::vector<Vec3i>& out) {
  Vec3 a = origin, b = end;
  if (!clip_segment_to_grid(geom, a, b)) return;

  Vec3i cur = geom.key_of_unchecked(a);
  const Vec3i last = geom.key_of_unchecked(b);
  cur = cur.cwiseMax(Vec3i::Zero()).cwiseMin(geom.dims - Vec3i::Ones());
  out.push_back(cur);
  if (cur == last) return;

  const Vec3 d = b - a;
  Vec3i step;
  Vec3 t_max, t_delta;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] > 0.0) {
      step[axis] = 1;
      const double next = geom.origin[axis] + (cur[axis] + 1) * geom.voxel_size;
      t_max[axis] = (next - a[axis]) / d[axis];
      t_delta[axis] = geom.voxel_size / d[axis];
    } else if (d[axis] < 0.0) {
      step[axis] = -1;
      const double next = geom.origin[axis] + cur[axis] * geom.voxel_size;
      t_max[axis] = (next - a[axis]) / d[axis];
      t_delta[axis] = -geom.voxel_size / d[axis];
    } else {
      step[axis] = 0;
      t_max[axis] = std::numeric_limits<double>::infinity();
      t_delta[axis] = std::numeric_limits<double>::infinity();
    }
  }

  // Hard bound: the chain length can never exceed the Manhattan key span.
  const int max_steps = (last - cur).cwiseAbs().sum() + 3;
  for (int i = 0; i < max_steps; ++i) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    cur[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    if (!geom.key_in_bounds(cur)) return;
    out.push_back(cur);
    if (cur == last) return;
  }
}

namespace {

bool occupied_miss_allowed(const Ray& ray, const VoxelRecord& rec, const GateThresholds& gate) {
  if (!ray.well_observed) return false;
  if (rec.point_count >= gate.point_count_threshold) return false;
  if (!rec.has_normal) return false;
  const Vec3 dir = (ray.endpoint - ray.origin).normalized();
  const double cos_angle = std::abs(dir.dot(rec.normal.cast<double>()));
  if (cos_angle <= std::cos(deg2rad(gate.ray_normal_angle_deg))) return false;
  return rec.quality < static_cast<float>(gate.quality_threshold);
}

}  // namespace

void gated_update(const Ray& ray, VoxelMap& map, const GateThresholds& gate) {
  thread_local std::vector<Vec3i> path;
  path.clear();
  traverse(map.geometry(), ray.origin, ray.endpoint, path);
  if (path.empty()) return;

  // The endpoint voxel is the last traversed voxel when the endpoint is in
  // bounds; a clipped ray has no endpoint voxel to hit.
  const bool end_in_bounds = map.in_bounds(ray.endpoint);
  const Vec3i end_key = end_in_bounds ? map.geometry().key_of_unchecked(ray.endpoint) : Vec3i();

  if (ray.well_observed && end_in_bounds) map.update_occupancy(end_key, true);

  for (const Vec3i& key : path) {
    if (end_in_bounds && key == end_key) continue;
    const VoxelRecord& rec = map.record(key);
    if (map.state_of(rec.log_odds) == Occupancy::kOccupied) {
      if (!occupied_miss_allowed(ray, rec, gate)) return;  // gate blocks, ray ends here
      map.update_occupancy(key, false);
    } else {
      map.update_occupancy(key, false);
    }
  }
}

void naive_update(const Ray& ray, VoxelMap& map) {
  thread_local std::vector<Vec3i> path;
  path.clear();
  traverse(map.geometry(), ray.origin, ray.endpoint, path);
  if (path.empty()) return;

  const bool end_in_bounds = map.in_bounds(ray.endpoint);
  const Vec3i end_key = end_in_bounds ? map.geometry().key_of_unchecked(ray.endpoint) : Vec3i();
  if (end_in_bounds) map.update_occupancy(end_key, true);
  for (const Vec3i& key : path) {
    if (end_in_bounds && key == end_key) continue;
    map.update_occupancy(key, false);
  }
}

}  // namespace scout
