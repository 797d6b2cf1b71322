#include "scout/observation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace scout {

PointCloudFrame merge_frames(const std::vector<PointCloudFrame>& recent, int buffer_depth) {
  if (recent.empty()) throw std::invalid_argument("merge_frames: empty frame list");
  if (buffer_depth < 1) throw std::invalid_argument("merge_frames: buffer_depth < 1");
  PointCloudFrame merged;
  merged.sensor_pose = recent.back().sensor_pose;
  merged.cycle_id = recent.back().cycle_id;
  const std::size_t first =
      recent.size() > static_cast<std::size_t>(buffer_depth)
          ? recent.size() - static_cast<std::size_t>(buffer_depth)
          : 0;
  for (std::size_t i = first; i < recent.size(); ++i)
    merged.points.insert(merged.points.end(), recent[i].points.begin(), recent[i].points.end());
  return merged;
}

double compute_quality(const Vec3& sensor_pos, const Vec3& point, const Vec3& normal) {
  const Vec3 ray = point - sensor_pos;
  const double rn = ray.norm();
  if (rn <= 0.0) throw std::invalid_argument("compute_quality: zero-length ray");
  const double nn = normal.norm();
  if (nn <= 0.0) throw std::invalid_argument("compute_quality: zero normal");
  return std::min(1.0, std::abs(ray.dot(normal)) / (rn * nn));
}

namespace {

// Uniform spatial hash over the buffer, cell edge = search radius.
struct PointHash {
  explicit PointHash(double cell) : cell_size(cell) {}

  std::int64_t cell_key(const Vec3& p) const {
    const auto cx = static_cast<std::int64_t>(std::floor(p.x() / cell_size));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y() / cell_size));
    const auto cz = static_cast<std::int64_t>(std::floor(p.z() / cell_size));
    return (cx * 73856093) ^ (cy * 19349663) ^ (cz * 83492791);
  }

  void build(const std::vector<PointSample>& points) {
    for (std::size_t i = 0; i < points.size(); ++i)
      cells[cell_key(points[i].position)].push_back(i);
  }

  template <typename Fn>
  void for_neighbors(const Vec3& q, Fn&& fn) const {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const Vec3 probe = q + Vec3(dx, dy, dz).eval() * cell_size;
          const auto it = cells.find(cell_key(probe));
          if (it == cells.end()) continue;
          for (std::size_t idx : it->second) fn(idx);
        }
  }

  double cell_size;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells;
};

}  // namespace

std::unordered_map<std::int64_t, NormalEstimate> estimate_normals(const PointCloudFrame& buffer,
                                                                  int k, double radius,
                                                                  const GridGeometry& geom) {
  if (k < 3) throw std::invalid_argument("estimate_normals: k must be >= 3");

  std::unordered_map<std::int64_t, NormalEstimate> out;
  if (buffer.points.empty()) return out;

  PointHash hash(radius);
  hash.build(buffer.points);

  // Candidate voxels: every in-bounds voxel containing at least one point.
  std::unordered_map<std::int64_t, char> candidates;
  for (const PointSample& s : buffer.points) {
    const Vec3i key = geom.key_of_unchecked(s.position);
    if (geom.key_in_bounds(key)) candidates.emplace(geom.linear_index(key), 0);
  }

  std::vector<std::pair<double, std::size_t>> near;  // (squared distance, point index)
  for (const auto& [linear, unused] : candidates) {
    const Vec3 center = geom.center_of(geom.key_of_linear(linear));
    near.clear();
    const double r2 = radius * radius;
    hash.for_neighbors(center, [&](std::size_t idx) {
      const double d2 = (buffer.points[idx].position - center).squaredNorm();
      if (d2 <= r2) near.emplace_back(d2, idx);
    });
    if (near.size() < 3) continue;
    if (near.size() > static_cast<std::size_t>(k)) {
      std::nth_element(near.begin(), near.begin() + k, near.end());
      near.resize(static_cast<std::size_t>(k));
    }

    Vec3 mean = Vec3::Zero();
    for (const auto& [d2, idx] : near) mean += buffer.points[idx].position;
    mean /= static_cast<double>(near.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& [d2, idx] : near) {
      const Vec3 d = buffer.points[idx].position - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(near.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
    eig.computeDirect(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    Vec3 normal = eig.eigenvectors().col(0);
    if (normal.dot(buffer.sensor_pose.position - center) < 0.0) normal = -normal;
    const double norm = normal.norm();
    if (norm <= 0.0) continue;
    normal /= norm;

    NormalEstimate est;
    est.normal = normal;
    est.neighbor_count = static_cast<int>(near.size());
    est.planarity = evals[1] > 0.0 ? 1.0 - std::max(0.0, evals[0]) / evals[1] : 0.0;
    out.emplace(linear, est);
  }
  return out;
}

void ObservationPipeline::integrate_frame(const PointCloudFrame& frame, VoxelMap& map,
                                          const SphereGrid* sphere) {
  buffer_.push_back(frame);
  while (buffer_.size() > static_cast<std::size_t>(config_.buffer_depth)) buffer_.pop_front();

  PointCloudFrame merged;
  merged.sensor_pose = frame.sensor_pose;
  merged.cycle_id = frame.cycle_id;
  for (const PointCloudFrame& f : buffer_)
    merged.points.insert(merged.points.end(), f.points.begin(), f.points.end());

  const GridGeometry& geom = map.geometry();

  // Per-voxel point counts over the merge buffer, reset each cycle. Ordered
  // container keeps the write order deterministic.
  std::map<std::int64_t, std::int32_t> counts;
  for (const PointSample& s : merged.points) {
    const Vec3i key = geom.key_of_unchecked(s.position);
    if (geom.key_in_bounds(key)) ++counts[geom.linear_index(key)];
  }
  std::vector<std::pair<std::int64_t, std::int32_t>> count_list(counts.begin(), counts.end());
  map.begin_count_cycle(count_list);

  const auto normals = estimate_normals(merged, config_.normal_neighbors, config_.normal_radius,
                                        geom);

  // Per current-frame point: quality against the endpoint voxel's fresh
  // normal; keep the max per voxel.
  const Vec3 sensor = frame.sensor_pose.position;
  std::map<std::int64_t, double> max_quality;
  std::vector<double> point_quality(frame.points.size(), -1.0);
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    const Vec3& p = frame.points[i].position;
    if ((p - sensor).norm() <= 0.0) continue;
    const Vec3i key = geom.key_of_unchecked(p);
    if (!geom.key_in_bounds(key)) continue;
    const auto it = normals.find(geom.linear_index(key));
    if (it == normals.end()) continue;
    const double q = compute_quality(sensor, p, it->second.normal);
    point_quality[i] = q;
    auto [entry, inserted] = max_quality.emplace(geom.linear_index(key), q);
    if (!inserted) entry->second = std::max(entry->second, q);
  }

  // Store annotations for every counted voxel.
  for (const auto& [linear, n] : count_list) {
    const Vec3i key = geom.key_of_linear(linear);
    const auto nit = normals.find(linear);
    const auto qit = max_quality.find(linear);
    map.store_observation(key, n,
                          nit != normals.end() ? std::optional<Vec3>(nit->second.normal)
                                               : std::nullopt,
                          qit != max_quality.end() ? std::optional<double>(qit->second)
                                                   : std::nullopt);
  }

  // Gated raycast per current-frame point, in frame order.
  const double cos_ray = std::cos(deg2rad(config_.theta_ray_deg));
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    const Vec3& p = frame.points[i].position;
    if ((p - sensor).norm() <= 0.0) continue;
    Ray ray;
    ray.origin = sensor;
    ray.endpoint = p;
    ray.endpoint_quality = point_quality[i] >= 0.0 ? point_quality[i] : 0.0;
    ray.well_observed = ray.endpoint_quality >= cos_ray;
    gated_update(ray, map, config_.gate);
  }

  // Free-space labeling toward return-free directions.
  if (sphere != nullptr) {
    const auto open = sphere->open_cells(frame);
    sphere->outward_raycast(open, frame.sensor_pose.position, frame.sensor_pose.yaw, map);
  }
}

}  // namespace scout
