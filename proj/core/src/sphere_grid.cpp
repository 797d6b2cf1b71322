#include "scout/sphere_grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "scout/observation.hpp"
#include "scout/raycast.hpp"

namespace scout {

namespace {
int span_bins(double lo_deg, double hi_deg, double bin_deg) {
  const double span = hi_deg - lo_deg;
  const double n = span / bin_deg;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 || rounded < 1.0) return -1;
  return static_cast<int>(rounded);
}
}  // namespace

int SphereGridConfig::num_lon() const { return span_bins(lon_min_deg, lon_max_deg, bin_deg); }
int SphereGridConfig::num_lat() const { return span_bins(lat_min_deg, lat_max_deg, bin_deg); }

void SphereGridConfig::validate() const {
  if (radius <= 0.0) throw std::invalid_argument("sphere: radius must be > 0");
  if (bin_deg <= 0.0) throw std::invalid_argument("sphere: bin_deg must be > 0");
  if (num_lon() < 0 || num_lat() < 0)
    throw std::invalid_argument("sphere: bin_deg must divide the longitude and latitude spans");
  if (neighborhood_ring < 0) throw std::invalid_argument("sphere: neighborhood_ring < 0");
  if (min_count_threshold < 0) throw std::invalid_argument("sphere: min_count_threshold < 0");
}

SphereGrid::SphereGrid(const SphereGridConfig& config) : config_(config) {
  config_.validate();
  n_lon_ = config_.num_lon();
  n_lat_ = config_.num_lat();
  bin_rad_ = deg2rad(config_.bin_deg);
  lon_min_rad_ = deg2rad(config_.lon_min_deg);
  lat_min_rad_ = deg2rad(config_.lat_min_deg);
  accum_.resize(static_cast<std::size_t>(num_cells()));
  occluded_.assign(static_cast<std::size_t>(num_cells()), 0);
}

SphereProjection SphereGrid::project(const Vec3& p) const {
  const double r = p.norm();
  if (r <= 0.0) throw std::invalid_argument("sphere: cannot project the zero vector");
  double lon = std::atan2(p.y(), p.x());
  if (lon < 0.0) lon += 2.0 * kPi;
  const double lat = std::asin(std::clamp(p.z() / r, -1.0, 1.0));

  SphereProjection out{r, lon, lat, std::nullopt};
  const int lon_idx = static_cast<int>(std::floor((lon - lon_min_rad_) / bin_rad_));
  const int lat_idx = static_cast<int>(std::floor((lat - lat_min_rad_) / bin_rad_));
  if (lat_idx >= 0 && lat_idx < n_lat_ && lon_idx >= 0 && lon_idx < n_lon_)
    out.cell = SphereCellRef{lon_idx, lat_idx};
  return out;
}

double SphereGrid::cell_center_lon(const SphereCellRef& c) const {
  return lon_min_rad_ + (c.lon_idx + 0.5) * bin_rad_;
}

double SphereGrid::cell_center_lat(const SphereCellRef& c) const {
  return lat_min_rad_ + (c.lat_idx + 0.5) * bin_rad_;
}

Vec3 SphereGrid::cell_center_direction(const SphereCellRef& c) const {
  const double lon = cell_center_lon(c);
  const double lat = cell_center_lat(c);
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

void SphereGrid::accumulate_calibration(const PointCloudFrame& frame) {
  for (const PointSample& s : frame.points) {
    const Vec3 local = unrotate_yaw(frame.sensor_pose.yaw, s.position - frame.sensor_pose.position);
    if (local.norm() <= 0.0) continue;
    const SphereProjection proj = project(local);
    if (!proj.cell) continue;
    CellAccum& acc = accum_[static_cast<std::size_t>(cell_index(*proj.cell))];
    acc.count += 1;
    acc.sum_lat_i += proj.lat * s.intensity;
    acc.sum_lon_i += proj.lon * s.intensity;
    acc.sum_i += s.intensity;
  }
  ++calibration_frames_;
}

void SphereGrid::finalize_calibration() {
  if (calibration_frames_ == 0)
    throw std::logic_error("sphere: finalize_calibration before any accumulated frame");
  const double tol = deg2rad(config_.centroid_tolerance_deg);
  for (int lat = 0; lat < n_lat_; ++lat) {
    for (int lon = 0; lon < n_lon_; ++lon) {
      const SphereCellRef c{lon, lat};
      const CellAccum& acc = accum_[static_cast<std::size_t>(cell_index(c))];
      bool occ = false;
      if (acc.count == 0) {
        occ = true;  // a direction that never returns cannot be free by evidence
      } else if (acc.count < config_.min_count_threshold && acc.sum_i > 0.0) {
        const double mean_lon = acc.sum_lon_i / acc.sum_i;
        const double mean_lat = acc.sum_lat_i / acc.sum_i;
        const double d_lon = mean_lon - cell_center_lon(c);
        const double d_lat = mean_lat - cell_center_lat(c);
        occ = std::sqrt(d_lon * d_lon + d_lat * d_lat) > tol;
      }
      occluded_[static_cast<std::size_t>(cell_index(c))] = occ ? 1 : 0;
    }
  }
  mask_ready_ = true;
}

bool SphereGrid::occluded(const SphereCellRef& c) const {
  return occluded_[static_cast<std::size_t>(cell_index(c))] != 0;
}

std::vector<SphereCellRef> SphereGrid::occluded_cells() const {
  std::vector<SphereCellRef> out;
  for (int lat = 0; lat < n_lat_; ++lat)
    for (int lon = 0; lon < n_lon_; ++lon)
      if (occluded_[static_cast<std::size_t>(lat * n_lon_ + lon)] != 0)
        out.push_back({lon, lat});
  return out;
}

void SphereGrid::set_mask(const std::vector<SphereCellRef>& cells) {
  occluded_.assign(static_cast<std::size_t>(num_cells()), 0);
  for (const SphereCellRef& c : cells) {
    if (c.lon_idx < 0 || c.lon_idx >= n_lon_ || c.lat_idx < 0 || c.lat_idx >= n_lat_)
      throw std::invalid_argument("sphere: mask cell outside grid");
    occluded_[static_cast<std::size_t>(cell_index(c))] = 1;
  }
  mask_ready_ = true;
}

std::vector<SphereCellRef> SphereGrid::open_cells(const PointCloudFrame& frame) const {
  if (!mask_ready_) throw std::logic_error("sphere: open_cells requires a finalized mask");

  std::vector<std::uint8_t> has_return(static_cast<std::size_t>(num_cells()), 0);
  for (const PointSample& s : frame.points) {
    const Vec3 local = unrotate_yaw(frame.sensor_pose.yaw, s.position - frame.sensor_pose.position);
    if (local.norm() <= 0.0) continue;
    const SphereProjection proj = project(local);
    if (proj.cell) has_return[static_cast<std::size_t>(cell_index(*proj.cell))] = 1;
  }

  const int ring = config_.neighborhood_ring;
  std::vector<SphereCellRef> open;
  for (int lat = 0; lat < n_lat_; ++lat) {
    for (int lon = 0; lon < n_lon_; ++lon) {
      if (occluded_[static_cast<std::size_t>(lat * n_lon_ + lon)]) continue;
      bool empty = true;
      for (int dl = -ring; dl <= ring && empty; ++dl) {
        const int la = lat + dl;
        if (la < 0 || la >= n_lat_) continue;  // latitude clips at the FOV edge
        for (int dn = -ring; dn <= ring; ++dn) {
          int lo = (lon + dn) % n_lon_;
          if (lo < 0) lo += n_lon_;
          if (has_return[static_cast<std::size_t>(la * n_lon_ + lo)]) {
            empty = false;
            break;
          }
        }
      }
      if (empty) open.push_back({lon, lat});
    }
  }
  return open;
}

void SphereGrid::outward_raycast(const std::vector<SphereCellRef>& open, const Vec3& position,
                                 double yaw, VoxelMap& map) const {
  std::vector<Vec3i> path;
  for (const SphereCellRef& cell : open) {
    const Vec3 dir = rotate_yaw(yaw, cell_center_direction(cell));
    const Vec3 end = position + config_.radius * dir;
    path.clear();
    traverse(map.geometry(), position, end, path);
    bool blocked = false;
    for (const Vec3i& key : path) {
      if (map.state(key) == Occupancy::kOccupied) {
        blocked = true;
        break;
      }
    }
    if (blocked) continue;  // discard the whole ray, mark nothing
    for (const Vec3i& key : path) map.update_occupancy(key, false);
  }
}

void SphereGrid::save_mask(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("sphere: cannot open mask file " + path);
  out << "# sphere occlusion mask v1\n";
  out << "bin_deg " << config_.bin_deg << "\n";
  out << "lon_deg " << config_.lon_min_deg << " " << config_.lon_max_deg << "\n";
  out << "lat_deg " << config_.lat_min_deg << " " << config_.lat_max_deg << "\n";
  for (const SphereCellRef& c : occluded_cells()) out << c.lon_idx << " " << c.lat_idx << "\n";
  if (!out) throw std::runtime_error("sphere: mask write failed " + path);
}

void SphereGrid::load_mask(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sphere: cannot open mask file " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# sphere occlusion mask", 0) != 0)
    throw std::runtime_error("sphere: bad mask header in " + path);

  auto expect = [&](const std::string& key) -> std::istringstream {
    if (!std::getline(in, line)) throw std::runtime_error("sphere: truncated mask " + path);
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw std::runtime_error("sphere: expected '" + key + "' in mask " + path);
    return ss;
  };
  double bin, lon0, lon1, lat0, lat1;
  { auto ss = expect("bin_deg"); ss >> bin; }
  { auto ss = expect("lon_deg"); ss >> lon0 >> lon1; }
  { auto ss = expect("lat_deg"); ss >> lat0 >> lat1; }
  const double tol = 1e-9;
  if (std::abs(bin - config_.bin_deg) > tol || std::abs(lon0 - config_.lon_min_deg) > tol ||
      std::abs(lon1 - config_.lon_max_deg) > tol || std::abs(lat0 - config_.lat_min_deg) > tol ||
      std::abs(lat1 - config_.lat_max_deg) > tol)
    throw std::runtime_error("sphere: mask header does not match the configured grid");

  std::vector<SphereCellRef> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    SphereCellRef c;
    if (!(ss >> c.lon_idx >> c.lat_idx))
      throw std::runtime_error("sphere: bad mask line '" + line + "'");
    cells.push_back(c);
  }
  set_mask(cells);
}

}  // namespace scout
