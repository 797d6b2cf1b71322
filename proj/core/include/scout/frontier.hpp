#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scout/geometry.hpp"
#include "scout/voxel_map.hpp"

namespace scout {

enum class FrontierKind : std::uint8_t { kQuality = 0, kUnknown = 1 };

struct Viewpoint {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  double score = 0.0;
};

struct FrontierCluster {
  int id = -1;
  FrontierKind kind = FrontierKind::kQuality;
  std::vector<Vec3i> voxels;  // ascending linear index
  Vec3 centroid = Vec3::Zero();
  std::optional<Vec3> mean_normal;  // quality clusters only
  std::optional<Viewpoint> viewpoint;
};

struct ViewpointSamplingConfig {
  std::vector<double> radii = {2.0, 3.5, 5.0};  // m, cylinder radii around the centroid
  double angular_step_deg = 30.0;
  std::vector<double> height_offsets = {-1.0, 0.0, 1.0};  // m
  double visibility_radius = 30.0;  // m, range limit when counting unknown voxels
  double lat_min_deg = -7.0;        // sensor FOV used for the unknown count
  double lat_max_deg = 52.0;
  double lon_fov_deg = 360.0;
  double box_dilation = 2.0;        // m, growth of the cluster bounding box
};

struct FrontierConfig {
  double quality_threshold = 0.7;   // Q_th
  double cluster_distance = 0.4;    // m, join threshold between voxel centers
  double normal_angle_deg = 30.0;   // join threshold between quality-voxel normals
  int min_cluster_size = 10;
  double planarity_ratio = 0.3;     // lambda_min/lambda_mid cutoff for quality clusters
  double stale_fraction = 0.2;      // discard a cluster when more than this fails
  ViewpointSamplingConfig sampling;
};

struct FrontierCandidates {
  std::vector<Vec3i> quality;  // occupied voxels with Q < Q_th, ascending linear index
  std::vector<Vec3i> unknown;  // free voxels bridging unknown and well-observed space
};

/// Scan the map for frontier candidate voxels (26-neighborhood adjacency).
FrontierCandidates collect_candidates(const VoxelMap& map, double quality_threshold);

/// Region growing over the pairwise join predicate (distance, and for quality
/// candidates the normal angle). Undersized clusters and non-planar quality
/// clusters are dropped. Output ordered by smallest member key.
std::vector<FrontierCluster> cluster_candidates(const std::vector<Vec3i>& candidates,
                                                FrontierKind kind, const VoxelMap& map,
                                                const FrontierConfig& config);

/// Cylindrical candidate poses around the cluster centroid. Keeps only
/// candidates inside the map, in free voxels, with a line of sight to the
/// centroid that crosses no occupied voxel (the centroid's own voxel is
/// exempt: quality clusters sit on surfaces). Yaw faces the centroid.
std::vector<Viewpoint> sample_viewpoints(const FrontierCluster& cluster, const VoxelMap& map,
                                         const ViewpointSamplingConfig& config);

/// Mean observation cosine of the cluster surface from z.
double score_quality_viewpoint(const Vec3& z, const FrontierCluster& cluster, const VoxelMap& map);

/// Number of unknown voxels inside the dilated cluster box that are within
/// sensing range and FOV of (z, yaw) and not hidden behind occupied voxels.
int score_unknown_viewpoint(const Vec3& z, double yaw, const FrontierCluster& cluster,
                            const VoxelMap& map, const ViewpointSamplingConfig& config);

/// Score all sampled candidates and pick the argmax (ties: lowest candidate
/// index). Returns nothing when no candidate survives the filters.
std::optional<Viewpoint> select_viewpoint(const FrontierCluster& cluster, const VoxelMap& map,
                                          const FrontierConfig& config);

struct RefreshResult {
  std::vector<FrontierCluster> kept;
  std::vector<Vec3i> recluster;  // still-valid voxels of discarded clusters
};

/// Re-evaluate the membership predicate of every cluster against a fresh map
/// snapshot; discard clusters whose failing fraction exceeds the threshold.
RefreshResult refresh_clusters(const std::vector<FrontierCluster>& clusters, const VoxelMap& map,
                               const FrontierConfig& config);

/// Owns the live cluster set across planning cycles.
class FrontierStore {
 public:
  explicit FrontierStore(const FrontierConfig& config) : config_(config) {}

  const FrontierConfig& config() const { return config_; }
  const std::vector<FrontierCluster>& clusters() const { return clusters_; }

  /// Refresh survivors, detect new clusters from unowned candidates, select
  /// viewpoints for the new ones. Kept clusters whose viewpoint became
  /// invalid are re-scored; clusters without any viewpoint are not stored.
  void update(const VoxelMap& map);

  void clear() { clusters_.clear(); }

  /// Kind-coded cluster cloud and viewpoint poses, for debugging runs.
  void export_cluster_ply(const std::string& path, const VoxelMap& map) const;
  void export_viewpoints_csv(const std::string& path) const;

 private:
  bool viewpoint_valid(const FrontierCluster& cluster, const VoxelMap& map) const;

  FrontierConfig config_;
  std::vector<FrontierCluster> clusters_;
  int next_id_ = 0;
};

}  // namespace scout
