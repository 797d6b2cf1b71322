#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scout/geometry.hpp"

namespace scout {

enum class Occupancy : std::uint8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

const char* occupancy_name(Occupancy s);

struct MapConfig {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.2;
  Vec3i dims = Vec3i(50, 50, 50);

  // log-odds occupancy model
  double lo_hit = 0.85;
  double lo_miss = -0.4;
  double lo_occ_threshold = 0.8;
  double lo_free_threshold = -0.4;
  double lo_min = -4.0;
  double lo_max = 4.0;

  // voxels with Q >= quality_threshold count as well observed
  double quality_threshold = 0.7;

  GridGeometry geometry() const { return {origin, voxel_size, dims}; }
  void validate() const;  // throws std::invalid_argument on bad config
};

/// Per-voxel occupancy evidence plus observation annotations.
struct VoxelRecord {
  float log_odds = 0.0f;
  std::int32_t point_count = 0;     // points in the merge buffer this cycle
  float quality = 0.0f;             // max |cos(theta)| ever observed, in [0,1]
  bool has_normal = false;
  bool well_observed = false;       // quality >= quality_threshold
  Eigen::Vector3f normal = Eigen::Vector3f::Zero();
};

/// Bounded dense 3D voxel grid, linear x-fastest indexing. Single writer;
/// planners operate on value copies when running off-thread.
class VoxelMap {
 public:
  explicit VoxelMap(const MapConfig& config);

  const MapConfig& config() const { return config_; }
  const GridGeometry& geometry() const { return geom_; }

  Vec3i world_to_voxel(const Vec3& p) const;  // throws std::out_of_range outside bounds
  Vec3 voxel_center(const Vec3i& key) const;  // throws std::out_of_range outside bounds
  bool in_bounds(const Vec3i& key) const { return geom_.key_in_bounds(key); }
  bool in_bounds(const Vec3& p) const { return geom_.point_in_bounds(p); }
  std::int64_t linear_index(const Vec3i& key) const { return geom_.linear_index(key); }

  Occupancy update_occupancy(const Vec3i& key, bool hit);
  Occupancy state(const Vec3i& key) const { return state_of(record(key).log_odds); }
  Occupancy state_linear(std::int64_t idx) const { return state_of(records_[idx].log_odds); }
  Occupancy state_of(float log_odds) const;

  /// Store the per-cycle observation annotations. point_count overwrites,
  /// quality max-aggregates, a present normal replaces the stored one.
  /// Throws std::invalid_argument on q outside [0,1] or a non-unit normal.
  void store_observation(const Vec3i& key, std::int32_t count,
                         const std::optional<Vec3>& normal, std::optional<double> q);

  /// Reset point counts touched in the previous cycle, then write this
  /// cycle's counts. `counts` holds (linear index, count) pairs.
  void begin_count_cycle(const std::vector<std::pair<std::int64_t, std::int32_t>>& counts);

  const VoxelRecord& record(const Vec3i& key) const;
  const VoxelRecord& record_linear(std::int64_t idx) const { return records_[idx]; }

  std::int64_t num_voxels() const { return geom_.num_voxels(); }

  /// Occupied-voxel centers with per-vertex quality, ASCII PLY.
  void export_occupied_ply(const std::string& path) const;

  /// Versioned little-endian dump of non-pristine voxels, and its loader.
  void save_dump(const std::string& path) const;
  static VoxelMap load_dump(const std::string& path);

 private:
  VoxelRecord& mutable_record(const Vec3i& key);

  MapConfig config_;
  GridGeometry geom_;
  std::vector<VoxelRecord> records_;
  std::vector<std::int64_t> counted_voxels_;  // linear indices with point_count > 0
};

}  // namespace scout
