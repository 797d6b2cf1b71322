#pragma once

#include <vector>

#include "scout/geometry.hpp"
#include "scout/voxel_map.hpp"

namespace scout {

/// One sensing ray from the vehicle to a detected point.
struct Ray {
  Vec3 origin = Vec3::Zero();       // sensor position
  Vec3 endpoint = Vec3::Zero();     // detected point
  double endpoint_quality = 0.0;    // |cos| between ray and surface normal at the endpoint
  bool well_observed = false;       // endpoint_quality >= cos(theta_ray)
};

/// Thresholds for the occupied-voxel miss gate.
struct GateThresholds {
  int point_count_threshold = 5;        // N_th
  double ray_normal_angle_deg = 30.0;   // theta_th
  double quality_threshold = 0.7;       // Q_th
};

/// Clip segment [a, b] to the grid's axis-aligned bounds. Returns false when
/// the segment misses the grid entirely.
bool clip_segment_to_grid(const GridGeometry& geom, Vec3& a, Vec3& b);

/// Amanatides-Woo grid stepping. Appends the ordered chain of voxels the
/// segment [origin, end] intersects (clipped to bounds) to `out`; consecutive
/// keys are face-adjacent and no key repeats. A degenerate segment yields the
/// single containing voxel.
void traverse(const GridGeometry& geom, const Vec3& origin, const Vec3& end,
              std::vector<Vec3i>& out);

inline std::vector<Vec3i> traverse(const GridGeometry& geom, const Vec3& origin,
                                   const Vec3& end) {
  std::vector<Vec3i> out;
  traverse(geom, origin, end, out);
  return out;
}

/// Quality-gated occupancy update along one ray.
///
/// The endpoint voxel is marked hit only for well-observed rays. Traversed
/// voxels in unknown/free state take a miss. A traversed occupied voxel takes
/// a miss only when the ray is well observed, the voxel's recent point count
/// is below N_th, the ray runs within theta_th of the stored surface normal,
/// and the stored quality is below Q_th; when the gate blocks, the ray
/// terminates at that voxel.
void gated_update(const Ray& ray, VoxelMap& map, const GateThresholds& gate);

/// Traditional raycast: unconditional endpoint hit and path misses. Kept as
/// the baseline the gated variant is evaluated against.
void naive_update(const Ray& ray, VoxelMap& map);

}  // namespace scout
