#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "unmix3d/hsi_io.hpp"

namespace unmix3d::io {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'H', 'S', 'C', '1'};
// Refuse headers describing more than 2^32 values.
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 32;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

struct RawCube {
  int depth;
  int height;
  int width;
  std::vector<double> values;
};

void store_raw(int depth, int height, int width, std::span<const double> values,
               const fs::path& path) {
  std::string bytes(kMagic.begin(), kMagic.end());
  bytes.reserve(16 + 4 * values.size());
  put_u32(bytes, static_cast<std::uint32_t>(depth));
  put_u32(bytes, static_cast<std::uint32_t>(height));
  put_u32(bytes, static_cast<std::uint32_t>(width));
  for (double v : values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(bytes, bits);
  }
  write_file(path, bytes);
}

RawCube load_raw(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError(path.string() + ": not an HSC1 file (bad magic)");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t d = get_u32(p + 4);
  const std::uint32_t h = get_u32(p + 8);
  const std::uint32_t w = get_u32(p + 12);
  if (d == 0 || h == 0 || w == 0) throw FormatError(path.string() + ": zero dimension in header");
  const std::uint64_t count = std::uint64_t{d} * h * w;
  if (d > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      h > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      w > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      std::uint64_t{h} * w > static_cast<std::uint64_t>(std::numeric_limits<int>::max()) ||
      count > kMaxValues) {
    throw FormatError(path.string() + ": header dimensions overflow");
  }
  const std::uint64_t payload = bytes.size() - 16;
  if (payload < 4 * count) {
    throw FormatError(path.string() + ": truncated payload (" + std::to_string(payload / 4) +
                      " of " + std::to_string(count) + " values)");
  }
  if (payload > 4 * count) throw FormatError(path.string() + ": trailing bytes after payload");
  RawCube raw{static_cast<int>(d), static_cast<int>(h), static_cast<int>(w), {}};
  raw.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(p + 16 + 4 * i);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    raw.values[i] = f;
  }
  return raw;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const fs::path& path, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end == s.c_str() || *end != '\0') {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void store_cube(const HsiCube& cube, const fs::path& path) {
  store_raw(cube.depth(), cube.height(), cube.width(), cube.values(), path);
}

HsiCube load_cube(const fs::path& path) {
  RawCube raw = load_raw(path);
  return HsiCube(raw.depth, raw.height, raw.width, std::move(raw.values));
}

void store_abundances(const AbundanceMaps& maps, const fs::path& path) {
  store_raw(maps.depth(), maps.height(), maps.width(), maps.values(), path);
}

AbundanceMaps load_abundances(const fs::path& path) {
  RawCube raw = load_raw(path);
  return AbundanceMaps(raw.depth, raw.height, raw.width, std::move(raw.values));
}

void store_endmembers_csv(const EndmemberMatrix& e, const fs::path& path) {
  std::string out = "band";
  for (Eigen::Index p = 0; p < e.cols(); ++p) out += ",em" + std::to_string(p + 1);
  out += '\n';
  for (Eigen::Index l = 0; l < e.rows(); ++l) {
    out += std::to_string(l + 1);
    for (Eigen::Index p = 0; p < e.cols(); ++p) out += ',' + format_double(e(l, p));
    out += '\n';
  }
  write_file(path, out);
}

EndmemberMatrix load_endmembers_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "band") {
    throw FormatError(path.string() + ": header must be band,em1,...,emP");
  }
  const int materials = static_cast<int>(header.size()) - 1;
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (static_cast<int>(fields.size()) != materials + 1) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(materials + 1) + " fields");
    }
    std::vector<double> row(materials);
    for (int p = 0; p < materials; ++p) row[p] = parse_double(fields[p + 1], path, line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no band rows");
  EndmemberMatrix e(static_cast<Eigen::Index>(rows.size()), materials);
  for (std::size_t l = 0; l < rows.size(); ++l)
    for (int p = 0; p < materials; ++p) e(static_cast<Eigen::Index>(l), p) = rows[l][p];
  return e;
}

void store_pgm16(std::span<const double> values, int height, int width, const fs::path& path) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw DimensionError("pgm: value count does not match dimensions");
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  out.reserve(out.size() + 2 * values.size());
  for (double v : values) {
    const double c = std::clamp(v, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(c * 65535.0));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xFF));
  }
  write_file(path, out);
}

std::vector<double> load_pgm16(const fs::path& path, int& height, int& width) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw FormatError(path.string() + ": not a binary PGM");
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    if (std::stoi(next_token()) != 65535) {
      throw FormatError(path.string() + ": only 16-bit PGM (maxval 65535) is supported");
    }
  } catch (const std::logic_error&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0) throw FormatError(path.string() + ": bad PGM dimensions");
  ++pos;  // single whitespace after maxval
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() < pos + 2 * count) throw FormatError(path.string() + ": truncated PGM");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
    values[i] = ((hi << 8) | lo) / 65535.0;
  }
  return values;
}

void store_abundance_pgms(const AbundanceMaps& maps, const fs::path& dir, const std::string& prefix) {
  for (int p = 0; p < maps.depth(); ++p) {
    store_pgm16(maps.plane(p), maps.height(), maps.width(),
                dir / (prefix + std::to_string(p + 1) + ".pgm"));
  }
}

AbundanceMaps load_abundance_pgms(const fs::path& dir, const std::string& prefix) {
  std::vector<std::vector<double>> planes;
  int height = 0;
  int width = 0;
  for (int p = 1;; ++p) {
    const fs::path file = dir / (prefix + std::to_string(p) + ".pgm");
    if (!fs::exists(file)) break;
    int h = 0;
    int w = 0;
    planes.push_back(load_pgm16(file, h, w));
    if (p == 1) {
      height = h;
      width = w;
    } else if (h != height || w != width) {
      throw DimensionError(file.string() + ": map size differs from " + prefix + "1.pgm");
    }
  }
  if (planes.empty()) throw IoError("no " + prefix + "<p>.pgm files in " + dir.string());
  AbundanceMaps maps(static_cast<int>(planes.size()), height, width);
  for (std::size_t p = 0; p < planes.size(); ++p) {
    std::copy(planes[p].begin(), planes[p].end(), maps.plane(static_cast<int>(p)).begin());
  }
  return maps;
}

}  // namespace unmix3d::io
