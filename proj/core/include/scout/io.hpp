#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace scout {

/// Little-endian fixed-width writer. The host is little-endian on every
/// supported target; byte order is asserted once at startup in debug builds.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void bytes(const void* data, std::size_t n);
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void f32(float v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  void bytes(void* data, std::size_t n);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32();
  float f32();
  double f64();

 private:
  std::istream& in_;
};

/// Minimal ASCII PLY writer (vertex-only clouds).
class PlyWriter {
 public:
  explicit PlyWriter(const std::string& path);
  ~PlyWriter();
  void begin_vertices(std::size_t count, const std::vector<std::string>& float_properties);
  void vertex(const std::vector<double>& values);
  void finish();

 private:
  struct Impl;
  Impl* impl_;
};

/// Shortest-round-trip decimal representation of a double ("%.17g" trimmed),
/// used wherever artifacts must be recomputable exactly from their text form.
std::string format_double(double v);

/// Parse helper that rejects trailing junk.
double parse_double(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);

void ensure_parent_dir(const std::string& path);

}  // namespace scout
