#include "scout/frontier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "scout/io.hpp"
#include "scout/raycast.hpp"

namespace scout {

namespace {

bool unknown_candidate(const VoxelMap& map, const Vec3i& key, double q_th) {
  if (map.state(key) != Occupancy::kFree) return false;
  bool has_unknown = false, has_good_occupied = false;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const Vec3i nb = key + Vec3i(dx, dy, dz);
        if (!map.in_bounds(nb)) continue;
        const VoxelRecord& rec = map.record(nb);
        const Occupancy st = map.state_of(rec.log_odds);
        if (st == Occupancy::kUnknown) has_unknown = true;
        else if (st == Occupancy::kOccupied && rec.quality >= static_cast<float>(q_th))
          has_good_occupied = true;
        if (has_unknown && has_good_occupied) return true;
      }
  return false;
}

}  // namespace

FrontierCandidates collect_candidates(const VoxelMap& map, double q_th) {
  FrontierCandidates out;
  const GridGeometry& geom = map.geometry();
  for (std::int64_t i = 0; i < geom.num_voxels(); ++i) {
    const VoxelRecord& rec = map.record_linear(i);
    const Occupancy st = map.state_of(rec.log_odds);
    if (st == Occupancy::kOccupied) {
      if (rec.quality < static_cast<float>(q_th)) out.quality.push_back(geom.key_of_linear(i));
    } else if (st == Occupancy::kFree) {
      const Vec3i key = geom.key_of_linear(i);
      if (unknown_candidate(map, key, q_th)) out.unknown.push_back(key);
    }
  }
  return out;
}

namespace {

std::vector<Vec3i> join_offsets(double cluster_distance, double voxel_size) {
  const int reach = static_cast<int>(std::floor(cluster_distance / voxel_size + 1e-9));
  std::vector<Vec3i> offsets;
  for (int dz = -reach; dz <= reach; ++dz)
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dx = -reach; dx <= reach; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const double d = voxel_size * std::sqrt(double(dx * dx + dy * dy + dz * dz));
        if (d <= cluster_distance + 1e-12) offsets.push_back({dx, dy, dz});
      }
  return offsets;
}

bool normals_compatible(const VoxelRecord& a, const VoxelRecord& b, double cos_th) {
  if (!a.has_normal || !b.has_normal) return false;
  return a.normal.cast<double>().dot(b.normal.cast<double>()) >= cos_th;
}

// lambda_min / lambda_mid over the voxel centers; degenerate spreads count as
// non-planar.
double cluster_planarity_ratio(const std::vector<Vec3i>& voxels, const GridGeometry& geom) {
  Vec3 mean = Vec3::Zero();
  for (const Vec3i& v : voxels) mean += geom.center_of(v);
  mean /= static_cast<double>(voxels.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3i& v : voxels) {
    const Vec3 d = geom.center_of(v) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
  eig.computeDirect(cov);
  const Vec3 evals = eig.eigenvalues();
  if (evals[1] <= 0.0) return 1.0;
  return std::max(0.0, evals[0]) / evals[1];
}

}  // namespace

std::vector<FrontierCluster> cluster_candidates(const std::vector<Vec3i>& candidates,
                                                FrontierKind kind, const VoxelMap& map,
                                                const FrontierConfig& config) {
  std::vector<FrontierCluster> clusters;
  if (candidates.empty()) return clusters;

  const GridGeometry& geom = map.geometry();
  std::vector<std::pair<std::int64_t, Vec3i>> sorted;
  sorted.reserve(candidates.size());
  for (const Vec3i& v : candidates) sorted.emplace_back(geom.linear_index(v), v);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::unordered_map<std::int64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < sorted.size(); ++i) index_of[sorted[i].first] = i;

  const auto offsets = join_offsets(config.cluster_distance, geom.voxel_size);
  const double cos_th = std::cos(deg2rad(config.normal_angle_deg));

  std::vector<char> visited(sorted.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < sorted.size(); ++seed) {
    if (visited[seed]) continue;
    visited[seed] = 1;
    stack.assign(1, seed);
    std::vector<Vec3i> members;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const Vec3i key = sorted[cur].second;
      members.push_back(key);
      for (const Vec3i& off : offsets) {
        const Vec3i nb = key + off;
        if (!geom.key_in_bounds(nb)) continue;
        const auto it = index_of.find(geom.linear_index(nb));
        if (it == index_of.end() || visited[it->second]) continue;
        if (kind == FrontierKind::kQuality &&
            !normals_compatible(map.record(key), map.record(nb), cos_th))
          continue;
        visited[it->second] = 1;
        stack.push_back(it->second);
      }
    }
    if (members.size() < static_cast<std::size_t>(config.min_cluster_size)) continue;
    if (kind == FrontierKind::kQuality &&
        cluster_planarity_ratio(members, geom) > config.planarity_ratio)
      continue;

    std::sort(members.begin(), members.end(), [&](const Vec3i& a, const Vec3i& b) {
      return geom.linear_index(a) < geom.linear_index(b);
    });

    FrontierCluster cluster;
    cluster.kind = kind;
    cluster.voxels = std::move(members);
    Vec3 centroid = Vec3::Zero();
    for (const Vec3i& v : cluster.voxels) centroid += geom.center_of(v);
    cluster.centroid = centroid / static_cast<double>(cluster.voxels.size());
    if (kind == FrontierKind::kQuality) {
      Vec3 sum = Vec3::Zero();
      for (const Vec3i& v : cluster.voxels) {
        const VoxelRecord& rec = map.record(v);
        if (rec.has_normal) sum += rec.normal.cast<double>();
      }
      if (sum.norm() > 0.0) cluster.mean_normal = sum.normalized();
    }
    clusters.push_back(std::move(cluster));
  }
  // BFS from ascending seeds already yields smallest-member-key order.
  return clusters;
}

namespace {

/// True when no occupied voxel lies strictly between a and b. The voxel
/// containing b itself is ignored.
bool line_of_sight(const VoxelMap& map, const Vec3& a, const Vec3& b) {
  thread_local std::vector<Vec3i> path;
  path.clear();
  traverse(map.geometry(), a, b, path);
  const bool end_in = map.in_bounds(b);
  const Vec3i end_key = end_in ? map.geometry().key_of_unchecked(b) : Vec3i();
  for (const Vec3i& key : path) {
    if (end_in && key == end_key) continue;
    if (map.state(key) == Occupancy::kOccupied) return false;
  }
  return true;
}

}  // namespace

std::vector<Viewpoint> sample_viewpoints(const FrontierCluster& cluster, const VoxelMap& map,
                                         const ViewpointSamplingConfig& config) {
  std::vector<Viewpoint> out;
  const int n_angles = std::max(1, static_cast<int>(std::round(360.0 / config.angular_step_deg)));
  for (double radius : config.radii) {
    for (int ai = 0; ai < n_angles; ++ai) {
      const double alpha = deg2rad(ai * config.angular_step_deg);
      for (double h : config.height_offsets) {
        const Vec3 pos = cluster.centroid +
                         Vec3(radius * std::cos(alpha), radius * std::sin(alpha), h).eval();
        if (!map.in_bounds(pos)) continue;
        if (map.state(map.geometry().key_of_unchecked(pos)) != Occupancy::kFree) continue;
        if (!line_of_sight(map, pos, cluster.centroid)) continue;
        Viewpoint vp;
        vp.position = pos;
        vp.yaw = std::atan2(cluster.centroid.y() - pos.y(), cluster.centroid.x() - pos.x());
        out.push_back(vp);
      }
    }
  }
  return out;
}

double score_quality_viewpoint(const Vec3& z, const FrontierCluster& cluster,
                               const VoxelMap& map) {
  if (cluster.voxels.empty()) return 0.0;
  double sum = 0.0;
  for (const Vec3i& v : cluster.voxels) {
    const VoxelRecord& rec = map.record(v);
    if (!rec.has_normal) continue;
    const Vec3 r = map.geometry().center_of(v) - z;
    const double rn = r.norm();
    if (rn <= 0.0) continue;
    sum += std::abs(r.dot(rec.normal.cast<double>())) / rn;
  }
  return sum / static_cast<double>(cluster.voxels.size());
}

namespace {

struct DilatedBox {
  Vec3i lo, hi;  // inclusive key range
};

DilatedBox dilated_cluster_box(const FrontierCluster& cluster, const GridGeometry& geom,
                               double dilation) {
  Vec3 lo = geom.center_of(cluster.voxels.front());
  Vec3 hi = lo;
  for (const Vec3i& v : cluster.voxels) {
    const Vec3 c = geom.center_of(v);
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  lo -= Vec3::Constant(dilation);
  hi += Vec3::Constant(dilation);
  DilatedBox box;
  box.lo = geom.key_of_unchecked(lo).cwiseMax(Vec3i::Zero());
  box.hi = geom.key_of_unchecked(hi).cwiseMin(geom.dims - Vec3i::Ones());
  return box;
}

bool in_sensor_fov(const Vec3& z, double yaw, const Vec3& target,
                   const ViewpointSamplingConfig& cfg) {
  const Vec3 local = unrotate_yaw(yaw, target - z);
  const double r = local.norm();
  if (r <= 0.0) return false;
  const double lat = rad2deg(std::asin(std::clamp(local.z() / r, -1.0, 1.0)));
  if (lat < cfg.lat_min_deg || lat > cfg.lat_max_deg) return false;
  if (cfg.lon_fov_deg < 360.0) {
    const double lon = rad2deg(std::atan2(local.y(), local.x()));
    if (std::abs(lon) > 0.5 * cfg.lon_fov_deg) return false;
  }
  return true;
}

}  // namespace

int score_unknown_viewpoint(const Vec3& z, double yaw, const FrontierCluster& cluster,
                            const VoxelMap& map, const ViewpointSamplingConfig& config) {
  if (cluster.voxels.empty()) return 0;
  const GridGeometry& geom = map.geometry();
  const DilatedBox box = dilated_cluster_box(cluster, geom, config.box_dilation);
  int count = 0;
  Vec3i k;
  for (k.z() = box.lo.z(); k.z() <= box.hi.z(); ++k.z())
    for (k.y() = box.lo.y(); k.y() <= box.hi.y(); ++k.y())
      for (k.x() = box.lo.x(); k.x() <= box.hi.x(); ++k.x()) {
        if (map.state(k) != Occupancy::kUnknown) continue;
        const Vec3 c = geom.center_of(k);
        if ((c - z).norm() > config.visibility_radius) continue;
        if (!in_sensor_fov(z, yaw, c, config)) continue;
        if (!line_of_sight(map, z, c)) continue;
        ++count;
      }
  return count;
}

std::optional<Viewpoint> select_viewpoint(const FrontierCluster& cluster, const VoxelMap& map,
                                          const FrontierConfig& config) {
  const std::vector<Viewpoint> candidates = sample_viewpoints(cluster, map, config.sampling);
  if (candidates.empty()) return std::nullopt;

  if (cluster.kind == FrontierKind::kQuality) {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double s = score_quality_viewpoint(candidates[i].position, cluster, map);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    Viewpoint vp = candidates[best];
    vp.score = best_score;
    return vp;
  }

  // Unknown clusters: exact argmax with a cheap upper bound (the count
  // without the line-of-sight term) to skip dominated candidates.
  const GridGeometry& geom = map.geometry();
  const DilatedBox box = dilated_cluster_box(cluster, geom, config.sampling.box_dilation);
  std::vector<Vec3> unknown_centers;
  Vec3i k;
  for (k.z() = box.lo.z(); k.z() <= box.hi.z(); ++k.z())
    for (k.y() = box.lo.y(); k.y() <= box.hi.y(); ++k.y())
      for (k.x() = box.lo.x(); k.x() <= box.hi.x(); ++k.x())
        if (map.state(k) == Occupancy::kUnknown) unknown_centers.push_back(geom.center_of(k));

  std::vector<std::pair<int, std::size_t>> bounded;  // (upper bound, candidate index)
  bounded.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    int bound = 0;
    for (const Vec3& c : unknown_centers) {
      if ((c - candidates[i].position).norm() > config.sampling.visibility_radius) continue;
      if (in_sensor_fov(candidates[i].position, candidates[i].yaw, c, config.sampling)) ++bound;
    }
    bounded.emplace_back(bound, i);
  }
  std::sort(bounded.begin(), bounded.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  int best_score = -1;
  std::size_t best_index = 0;
  for (const auto& [bound, i] : bounded) {
    if (bound < best_score) break;
    if (bound == best_score && i > best_index) continue;
    const int s = score_unknown_viewpoint(candidates[i].position, candidates[i].yaw, cluster, map,
                                          config.sampling);
    if (s > best_score || (s == best_score && i < best_index)) {
      best_score = s;
      best_index = i;
    }
  }
  Viewpoint vp = candidates[best_index];
  vp.score = static_cast<double>(best_score);
  return vp;
}

RefreshResult refresh_clusters(const std::vector<FrontierCluster>& clusters, const VoxelMap& map,
                               const FrontierConfig& config) {
  RefreshResult out;
  for (const FrontierCluster& cluster : clusters) {
    std::vector<Vec3i> valid;
    valid.reserve(cluster.voxels.size());
    for (const Vec3i& v : cluster.voxels) {
      bool ok;
      if (cluster.kind == FrontierKind::kQuality) {
        const VoxelRecord& rec = map.record(v);
        ok = map.state_of(rec.log_odds) == Occupancy::kOccupied &&
             rec.quality < static_cast<float>(config.quality_threshold);
      } else {
        ok = unknown_candidate(map, v, config.quality_threshold);
      }
      if (ok) valid.push_back(v);
    }
    const double failing =
        static_cast<double>(cluster.voxels.size() - valid.size()) /
        static_cast<double>(cluster.voxels.size());
    if (failing > config.stale_fraction) {
      out.recluster.insert(out.recluster.end(), valid.begin(), valid.end());
    } else {
      out.kept.push_back(cluster);
    }
  }
  return out;
}

bool FrontierStore::viewpoint_valid(const FrontierCluster& cluster, const VoxelMap& map) const {
  if (!cluster.viewpoint) return false;
  const Vec3& p = cluster.viewpoint->position;
  if (!map.in_bounds(p)) return false;
  if (map.state(map.geometry().key_of_unchecked(p)) != Occupancy::kFree) return false;
  return line_of_sight(map, p, cluster.centroid);
}

void FrontierStore::update(const VoxelMap& map) {
  RefreshResult refreshed = refresh_clusters(clusters_, map, config_);

  // Re-select viewpoints that the map update invalidated; clusters that lose
  // every candidate fall out and may be re-detected from fresh candidates.
  std::vector<FrontierCluster> kept;
  for (FrontierCluster& cluster : refreshed.kept) {
    if (!viewpoint_valid(cluster, map)) {
      cluster.viewpoint = select_viewpoint(cluster, map, config_);
      if (!cluster.viewpoint) continue;
    }
    kept.push_back(std::move(cluster));
  }
  clusters_ = std::move(kept);

  std::unordered_set<std::int64_t> owned;
  const GridGeometry& geom = map.geometry();
  for (const FrontierCluster& c : clusters_)
    for (const Vec3i& v : c.voxels) owned.insert(geom.linear_index(v));

  FrontierCandidates candidates = collect_candidates(map, config_.quality_threshold);
  auto unowned = [&](const std::vector<Vec3i>& in) {
    std::vector<Vec3i> out;
    out.reserve(in.size());
    for (const Vec3i& v : in)
      if (!owned.count(geom.linear_index(v))) out.push_back(v);
    return out;
  };

  for (FrontierKind kind : {FrontierKind::kQuality, FrontierKind::kUnknown}) {
    const auto fresh = unowned(kind == FrontierKind::kQuality ? candidates.quality
                                                              : candidates.unknown);
    for (FrontierCluster& cluster : cluster_candidates(fresh, kind, map, config_)) {
      cluster.viewpoint = select_viewpoint(cluster, map, config_);
      if (!cluster.viewpoint) continue;  // candidate frontier without a usable viewpoint
      cluster.id = next_id_++;
      clusters_.push_back(std::move(cluster));
    }
  }
}

void FrontierStore::export_cluster_ply(const std::string& path, const VoxelMap& map) const {
  std::size_t total = 0;
  for (const FrontierCluster& c : clusters_) total += c.voxels.size();
  PlyWriter ply(path);
  ply.begin_vertices(total, {"x", "y", "z", "cluster_id", "kind"});
  for (const FrontierCluster& c : clusters_)
    for (const Vec3i& v : c.voxels) {
      const Vec3 p = map.geometry().center_of(v);
      ply.vertex({p.x(), p.y(), p.z(), static_cast<double>(c.id),
                  c.kind == FrontierKind::kQuality ? 0.0 : 1.0});
    }
  ply.finish();
}

void FrontierStore::export_viewpoints_csv(const std::string& path) const {
  ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("frontier: cannot open " + path);
  out << "cluster_id,kind,x,y,z,yaw,score\n";
  for (const FrontierCluster& c : clusters_) {
    if (!c.viewpoint) continue;
    out << c.id << "," << (c.kind == FrontierKind::kQuality ? "quality" : "unknown") << ","
        << format_double(c.viewpoint->position.x()) << ","
        << format_double(c.viewpoint->position.y()) << ","
        << format_double(c.viewpoint->position.z()) << "," << format_double(c.viewpoint->yaw)
        << "," << format_double(c.viewpoint->score) << "\n";
  }
}

}  // namespace scout
