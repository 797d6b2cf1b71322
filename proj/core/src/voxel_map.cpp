#include "scout/voxel_map.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "scout/io.hpp"

namespace scout {

const char* occupancy_name(Occupancy s) {
  switch (s) {
    case Occupancy::kFree: return "free";
    case Occupancy::kOccupied: return "occupied";
    default: return "unknown";
  }
}

void MapConfig::validate() const {
  if (voxel_size <= 0.0) throw std::invalid_argument("map: voxel_size must be > 0");
  if (dims.minCoeff() <= 0) throw std::invalid_argument("map: dims must be positive");
  if (!(lo_hit > 0.0 && lo_miss < 0.0))
    throw std::invalid_argument("map: need lo_hit > 0 > lo_miss");
  if (!(lo_min <= lo_free_threshold && lo_free_threshold < lo_occ_threshold &&
        lo_occ_threshold <= lo_max))
    throw std::invalid_argument("map: need lo_min <= lo_free < lo_occ <= lo_max");
  if (quality_threshold < 0.0 || quality_threshold > 1.0)
    throw std::invalid_argument("map: quality_threshold must be in [0,1]");
}

VoxelMap::VoxelMap(const MapConfig& config) : config_(config), geom_(config.geometry()) {
  config_.validate();
  records_.resize(static_cast<std::size_t>(geom_.num_voxels()));
}

Vec3i VoxelMap::world_to_voxel(const Vec3& p) const {
  const Vec3i key = geom_.key_of_unchecked(p);
  if (!geom_.key_in_bounds(key)) throw std::out_of_range("world_to_voxel: point outside map");
  return key;
}

Vec3 VoxelMap::voxel_center(const Vec3i& key) const {
  if (!geom_.key_in_bounds(key)) throw std::out_of_range("voxel_center: key outside map");
  return geom_.center_of(key);
}

Occupancy VoxelMap::state_of(float log_odds) const {
  if (log_odds >= config_.lo_occ_threshold) return Occupancy::kOccupied;
  if (log_odds <= config_.lo_free_threshold) return Occupancy::kFree;
  return Occupancy::kUnknown;
}

const VoxelRecord& VoxelMap::record(const Vec3i& key) const {
  if (!geom_.key_in_bounds(key)) throw std::out_of_range("record: key outside map");
  return records_[static_cast<std::size_t>(geom_.linear_index(key))];
}

VoxelRecord& VoxelMap::mutable_record(const Vec3i& key) {
  if (!geom_.key_in_bounds(key)) throw std::out_of_range("record: key outside map");
  return records_[static_cast<std::size_t>(geom_.linear_index(key))];
}

Occupancy VoxelMap::update_occupancy(const Vec3i& key, bool hit) {
  VoxelRecord& rec = mutable_record(key);
  const double lo = std::clamp(static_cast<double>(rec.log_odds) +
                                   (hit ? config_.lo_hit : config_.lo_miss),
                               config_.lo_min, config_.lo_max);
  rec.log_odds = static_cast<float>(lo);
  return state_of(rec.log_odds);
}

void VoxelMap::store_observation(const Vec3i& key, std::int32_t count,
                                 const std::optional<Vec3>& normal, std::optional<double> q) {
  VoxelRecord& rec = mutable_record(key);
  if (q) {
    if (*q < 0.0 || *q > 1.0) throw std::invalid_argument("store_observation: q outside [0,1]");
    rec.quality = std::max(rec.quality, static_cast<float>(*q));
    rec.well_observed = rec.quality >= static_cast<float>(config_.quality_threshold);
  }
  if (normal) {
    if (std::abs(normal->norm() - 1.0) > 1e-6)
      throw std::invalid_argument("store_observation: normal must be unit length");
    rec.normal = normal->cast<float>();
    rec.has_normal = true;
  }
  rec.point_count = count;
}

void VoxelMap::begin_count_cycle(
    const std::vector<std::pair<std::int64_t, std::int32_t>>& counts) {
  for (std::int64_t idx : counted_voxels_) records_[static_cast<std::size_t>(idx)].point_count = 0;
  counted_voxels_.clear();
  counted_voxels_.reserve(counts.size());
  for (const auto& [idx, n] : counts) {
    records_[static_cast<std::size_t>(idx)].point_count = n;
    counted_voxels_.push_back(idx);
  }
}

void VoxelMap::export_occupied_ply(const std::string& path) const {
  std::vector<std::int64_t> occupied;
  for (std::int64_t i = 0; i < geom_.num_voxels(); ++i)
    if (state_linear(i) == Occupancy::kOccupied) occupied.push_back(i);

  PlyWriter ply(path);
  ply.begin_vertices(occupied.size(), {"x", "y", "z", "quality"});
  for (std::int64_t i : occupied) {
    const Vec3 c = geom_.center_of(geom_.key_of_linear(i));
    ply.vertex({c.x(), c.y(), c.z(), records_[static_cast<std::size_t>(i)].quality});
  }
  ply.finish();
}

namespace {
constexpr char kMapMagic[8] = {'S', 'C', 'T', 'M', 'A', 'P', '0', '\n'};
constexpr std::uint32_t kMapVersion = 1;
}  // namespace

void VoxelMap::save_dump(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dump: cannot open " + path);
  BinaryWriter w(out);
  w.bytes(kMapMagic, sizeof(kMapMagic));
  w.u32(kMapVersion);
  for (int a = 0; a < 3; ++a) w.f64(config_.origin[a]);
  w.f64(config_.voxel_size);
  for (int a = 0; a < 3; ++a) w.i32(config_.dims[a]);

  std::uint64_t count = 0;
  for (const VoxelRecord& r : records_)
    if (r.log_odds != 0.0f || r.point_count != 0 || r.quality != 0.0f || r.has_normal) ++count;
  w.u64(count);

  for (std::int64_t i = 0; i < geom_.num_voxels(); ++i) {
    const VoxelRecord& r = records_[static_cast<std::size_t>(i)];
    if (r.log_odds == 0.0f && r.point_count == 0 && r.quality == 0.0f && !r.has_normal) continue;
    const Vec3i k = geom_.key_of_linear(i);
    for (int a = 0; a < 3; ++a) w.i32(k[a]);
    w.f32(r.log_odds);
    w.f32(r.quality);
    w.i32(r.point_count);
    w.u8(r.has_normal ? 1 : 0);
    for (int a = 0; a < 3; ++a) w.f32(r.normal[a]);
  }
  if (!out) throw std::runtime_error("save_dump: write failed for " + path);
}

VoxelMap VoxelMap::load_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dump: cannot open " + path);
  BinaryReader r(in);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMapMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_dump: bad magic in " + path);
  if (r.u32() != kMapVersion) throw std::runtime_error("load_dump: unsupported version");

  MapConfig cfg;
  for (int a = 0; a < 3; ++a) cfg.origin[a] = r.f64();
  cfg.voxel_size = r.f64();
  for (int a = 0; a < 3; ++a) cfg.dims[a] = r.i32();
  VoxelMap map(cfg);

  const std::uint64_t count = r.u64();
  for (std::uint64_t n = 0; n < count; ++n) {
    Vec3i k;
    for (int a = 0; a < 3; ++a) k[a] = r.i32();
    if (!map.in_bounds(k)) throw std::runtime_error("load_dump: key outside bounds");
    VoxelRecord& rec = map.records_[static_cast<std::size_t>(map.linear_index(k))];
    rec.log_odds = r.f32();
    rec.quality = r.f32();
    rec.point_count = r.i32();
    rec.has_normal = r.u8() != 0;
    for (int a = 0; a < 3; ++a) rec.normal[a] = r.f32();
    rec.well_observed = rec.quality >= static_cast<float>(cfg.quality_threshold);
  }
  if (!in) throw std::runtime_error("load_dump: truncated file " + path);
  return map;
}

}  // namespace scout
