#pragma once

// Binary grid format for organized clouds (all integers and floats little-endian):
//
//   bytes 0..3    magic "TSCG"
//   u32           format version (1)
//   u32           width
//   u32           height
//   f32 x 3 x N   points, row-major, x y z in millimetres (N = width * height)
//   u8  x N       validity, 1 = valid
//
// Invalid pixels store zeros in the point block.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "tscan/errors.hpp"
#include "tscan/surface.hpp"

namespace tscan {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t x) {
  const char b[4] = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff),
                     static_cast<char>((x >> 16) & 0xff), static_cast<char>((x >> 24) & 0xff)};
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated cloud file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline constexpr char kCloudMagic[4] = {'T', 'S', 'C', 'G'};
inline constexpr std::uint32_t kCloudVersion = 1;

inline void write_cloud(std::ostream& os, const OrganizedPointCloud& cloud) {
  os.write(kCloudMagic, 4);
  detail::put_u32(os, kCloudVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(cloud.width()));
  detail::put_u32(os, static_cast<std::uint32_t>(cloud.height()));
  const auto& pts = cloud.points.data();
  const auto& valid = cloud.valid.data();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const float f = valid[i] ? static_cast<float>(pts[i][c]) : 0.0f;
      detail::put_u32(os, std::bit_cast<std::uint32_t>(f));
    }
  }
  for (auto b : valid) os.put(static_cast<char>(b ? 1 : 0));
  if (!os) throw IoError("failed writing cloud");
}

inline OrganizedPointCloud read_cloud(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCloudMagic, 4) != 0) throw IoError("not a TSCG cloud file");
  if (detail::get_u32(is) != kCloudVersion) throw IoError("unsupported cloud file version");
  const auto w = detail::get_u32(is);
  const auto h = detail::get_u32(is);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw IoError("implausible cloud dimensions");
  OrganizedPointCloud cloud(static_cast<int>(w), static_cast<int>(h));
  auto& pts = cloud.points.data();
  for (auto& p : pts)
    for (int c = 0; c < 3; ++c) p[c] = std::bit_cast<float>(detail::get_u32(is));
  for (auto& b : cloud.valid.data()) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw IoError("truncated cloud file");
    b = c ? 1 : 0;
  }
  return cloud;
}

inline void write_cloud(const std::string& path, const OrganizedPointCloud& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_cloud(os, cloud);
}

inline OrganizedPointCloud read_cloud(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_cloud(is);
}

}  // namespace tscan
