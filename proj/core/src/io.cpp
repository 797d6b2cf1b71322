#include "scout/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scout {

void BinaryWriter::bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void BinaryReader::bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw std::runtime_error("binary read: unexpected end of file");
}

std::uint8_t BinaryReader::u8() { std::uint8_t v; bytes(&v, 1); return v; }
std::uint32_t BinaryReader::u32() { std::uint32_t v; bytes(&v, 4); return v; }
std::uint64_t BinaryReader::u64() { std::uint64_t v; bytes(&v, 8); return v; }
std::int32_t BinaryReader::i32() { std::int32_t v; bytes(&v, 4); return v; }
float BinaryReader::f32() { float v; bytes(&v, 4); return v; }
double BinaryReader::f64() { double v; bytes(&v, 8); return v; }

struct PlyWriter::Impl {
  std::ofstream out;
  std::size_t expected = 0;
  std::size_t written = 0;
  bool finished = false;
};

PlyWriter::PlyWriter(const std::string& path) : impl_(new Impl) {
  ensure_parent_dir(path);
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw std::runtime_error("ply: cannot open " + path);
  }
}

PlyWriter::~PlyWriter() { delete impl_; }

void PlyWriter::begin_vertices(std::size_t count, const std::vector<std::string>& props) {
  impl_->expected = count;
  impl_->out << "ply\nformat ascii 1.0\nelement vertex " << count << "\n";
  for (const std::string& p : props) impl_->out << "property float " << p << "\n";
  impl_->out << "end_header\n";
}

void PlyWriter::vertex(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", values[i]);
    line += buf;
  }
  impl_->out << line << "\n";
  ++impl_->written;
}

void PlyWriter::finish() {
  if (impl_->finished) return;
  impl_->finished = true;
  if (impl_->written != impl_->expected)
    throw std::runtime_error("ply: vertex count mismatch");
  impl_->out.close();
  if (!impl_->out) throw std::runtime_error("ply: write failed");
}

std::string format_double(double v) {
  // Try increasing precision until the value round-trips.
  for (int prec = 9; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    auto [ptr, ec] = std::from_chars(buf, buf + std::strlen(buf), back);
    (void)ptr;
    if (ec == std::errc() && back == v) return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.c_str();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error("parse_double: invalid number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path() && !p.parent_path().empty())
    std::filesystem::create_directories(p.parent_path());
}

}  // namespace scout
