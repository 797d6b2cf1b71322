#pragma once

#include <vector>

#include "scout/geometry.hpp"
#include "scout/voxel_map.hpp"

namespace scout {

struct AstarResult {
  bool reached = false;
  double length = 0.0;        // m, sum of step costs
  std::vector<Vec3> path;     // voxel centers, start first (empty when unreached)
};

struct AstarLimits {
  std::int64_t max_expansions = 500000;
};

/// Shortest 26-connected path over free voxels between the voxels containing
/// `start` and `goal`. Step cost is the Euclidean center distance; diagonal
/// steps additionally require every voxel of the step's bounding box to be
/// free so that the straight segment between the two centers stays inside
/// free space (a corner-cutting diagonal would let the smoothed trajectory
/// clip an occupied voxel). Returns unreached when either endpoint voxel is
/// not free, no path exists, or the expansion limit is hit.
AstarResult astar(const VoxelMap& map, const Vec3& start, const Vec3& goal,
                  const AstarLimits& limits = {});

/// Successor rule shared with the search: keys adjacent to `from` reachable
/// by one safe 26-connected step. Exposed so oracles can mirror it.
void safe_neighbors(const VoxelMap& map, const Vec3i& from,
                    std::vector<std::pair<Vec3i, double>>& out);

}  // namespace scout
