#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "scout/geometry.hpp"
#include "scout/raycast.hpp"
#include "scout/sphere_grid.hpp"
#include "scout/voxel_map.hpp"

namespace scout {

struct PointSample {
  Vec3 position = Vec3::Zero();  // global frame
  double intensity = 1.0;
};

struct SensorPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

struct PointCloudFrame {
  SensorPose sensor_pose;
  std::vector<PointSample> points;
  std::int64_t cycle_id = 0;
};

struct NormalEstimate {
  Vec3 normal = Vec3::UnitZ();  // unit, oriented toward the sensor
  int neighbor_count = 0;
  double planarity = 0.0;       // 1 - lambda_min/lambda_mid, 0 when degenerate
};

struct ObservationConfig {
  int buffer_depth = 5;          // merged cycles
  int normal_neighbors = 10;     // k
  double normal_radius = 0.4;    // m, neighbor search radius around voxel centers
  double theta_ray_deg = 60.0;   // rays within this angle of the normal are well observed
  GateThresholds gate;
};

/// Concatenate the last `buffer_depth` frames; pose is the newest frame's.
/// Throws std::invalid_argument on an empty list.
PointCloudFrame merge_frames(const std::vector<PointCloudFrame>& recent, int buffer_depth);

/// Absolute cosine between the sensing ray (sensor -> point) and the surface
/// normal. Throws std::invalid_argument on a zero-length ray.
double compute_quality(const Vec3& sensor_pos, const Vec3& point, const Vec3& normal);

/// Plane fit per occupied-candidate voxel: for every voxel containing buffer
/// points, fit the <=k nearest buffer points within `radius` of the voxel
/// center (covariance eigendecomposition), orient the normal toward the
/// sensor. Voxels with fewer than 3 neighbors get no estimate.
std::unordered_map<std::int64_t, NormalEstimate> estimate_normals(const PointCloudFrame& buffer,
                                                                  int k, double radius,
                                                                  const GridGeometry& geom);

/// Runs the per-cycle mapping update: frame merging, per-voxel point counts,
/// normal estimation, quality bookkeeping, gated raycasting, and the outward
/// spherical-projection raycast.
class ObservationPipeline {
 public:
  explicit ObservationPipeline(const ObservationConfig& config) : config_(config) {}

  const ObservationConfig& config() const { return config_; }

  /// `sphere` may be null (no outward raycast, e.g. during calibration).
  void integrate_frame(const PointCloudFrame& frame, VoxelMap& map, const SphereGrid* sphere);

  const std::deque<PointCloudFrame>& buffer() const { return buffer_; }
  void reset() { buffer_.clear(); }

 private:
  ObservationConfig config_;
  std::deque<PointCloudFrame> buffer_;
};

}  // namespace scout
