#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scout/geometry.hpp"
#include "scout/voxel_map.hpp"

namespace scout {

struct PointCloudFrame;  // observation.hpp

/// Longitude/latitude cell grid over the sensor field of view, used both for
/// return-free direction detection and for the occlusion self-calibration.
struct SphereGridConfig {
  double radius = 30.0;          // m, outward raycast length
  double lon_min_deg = 0.0;
  double lon_max_deg = 360.0;
  double lat_min_deg = -7.0;
  double lat_max_deg = 52.0;
  double bin_deg = 1.0;          // must divide both angular spans evenly
  int neighborhood_ring = 1;     // cells around a candidate that must also be empty
  int min_count_threshold = 10;  // calibration: sparse-cell cutoff
  double centroid_tolerance_deg = 0.3;  // lambda_th

  int num_lon() const;
  int num_lat() const;
  void validate() const;  // throws std::invalid_argument
};

struct SphereCellRef {
  int lon_idx = 0;
  int lat_idx = 0;
  auto operator<=>(const SphereCellRef&) const = default;
};

struct SphereProjection {
  double range = 0.0;  // m
  double lon = 0.0;    // rad, wrapped to [0, 2*pi)
  double lat = 0.0;    // rad
  std::optional<SphereCellRef> cell;  // empty when latitude is outside the FOV
};

class SphereGrid {
 public:
  explicit SphereGrid(const SphereGridConfig& config);

  const SphereGridConfig& config() const { return config_; }
  int num_lon() const { return n_lon_; }
  int num_lat() const { return n_lat_; }
  int num_cells() const { return n_lon_ * n_lat_; }

  /// Spherical decomposition of a sensor-frame point. Throws on the zero
  /// vector. Longitude uses the full-quadrant arctangent.
  SphereProjection project(const Vec3& point_sensor_frame) const;

  /// Unit direction (sensor frame) through the center of a cell.
  Vec3 cell_center_direction(const SphereCellRef& cell) const;
  double cell_center_lon(const SphereCellRef& cell) const;
  double cell_center_lat(const SphereCellRef& cell) const;

  // -- calibration ----------------------------------------------------------

  /// Accumulate one frame of returns (Eq-style intensity-weighted sums).
  void accumulate_calibration(const PointCloudFrame& frame);

  /// Number of frames accumulated so far.
  int calibration_frames() const { return calibration_frames_; }

  /// Derive the occlusion mask. A cell is occluded when it never produced a
  /// return, or when its returns are sparse and their intensity-weighted
  /// centroid sits farther than the tolerance from the cell center. Throws
  /// when no frame was accumulated. Idempotent.
  void finalize_calibration();

  bool mask_ready() const { return mask_ready_; }
  bool occluded(const SphereCellRef& cell) const;
  std::vector<SphereCellRef> occluded_cells() const;  // row-major order

  void set_mask(const std::vector<SphereCellRef>& occluded);

  // -- per-frame usage ------------------------------------------------------

  /// Cells with no return in `frame` whose ring neighborhood is also empty
  /// and which are not occluded. Longitude wraps; latitude clips. Requires a
  /// finalized or loaded mask. Row-major order.
  std::vector<SphereCellRef> open_cells(const PointCloudFrame& frame) const;

  /// Cast a full-radius ray toward each open cell center (rotated to the
  /// global frame by the pose yaw). A ray whose path contains an occupied
  /// voxel is discarded without marking anything; otherwise every traversed
  /// voxel takes a miss.
  void outward_raycast(const std::vector<SphereCellRef>& open, const Vec3& position,
                       double yaw, VoxelMap& map) const;

  // -- mask file ------------------------------------------------------------

  void save_mask(const std::string& path) const;
  void load_mask(const std::string& path);  // validates header against config

 private:
  struct CellAccum {
    std::int64_t count = 0;
    double sum_lat_i = 0.0;  // sum of lat_i * I_i
    double sum_lon_i = 0.0;  // sum of lon_i * I_i
    double sum_i = 0.0;      // sum of I_i
  };

  int cell_index(const SphereCellRef& c) const { return c.lat_idx * n_lon_ + c.lon_idx; }

  SphereGridConfig config_;
  int n_lon_ = 0;
  int n_lat_ = 0;
  double bin_rad_ = 0.0;
  double lon_min_rad_ = 0.0;
  double lat_min_rad_ = 0.0;

  std::vector<CellAccum> accum_;
  std::vector<std::uint8_t> occluded_;
  int calibration_frames_ = 0;
  bool mask_ready_ = false;
};

}  // namespace scout
