#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace tscan {

/// Dense row-major image-aligned grid. Pixel (u, v) is column u, row v.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  T& operator()(int u, int v) {
    assert(contains(u, v));
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }
  const T& operator()(int u, int v) const {
    assert(contains(u, v));
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }

  T* row(int v) { return data_.data() + static_cast<std::size_t>(v) * width_; }
  const T* row(int v) const { return data_.data() + static_cast<std::size_t>(v) * width_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Grid<Rgb>;
using GrayImage = Grid<float>;

struct Hsv {
  double h_deg;  // [0, 360)
  double s;      // [0, 1]
  double v;      // [0, 1]
};

inline Hsv rgb_to_hsv(const Rgb& c) {
  const double r = c[0] / 255.0, g = c[1] / 255.0, b = c[2] / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r)
      h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g)
      h = 60.0 * ((b - r) / d + 2.0);
    else
      h = 60.0 * ((r - g) / d + 4.0);
    if (h < 0.0) h += 360.0;
  }
  return {h, mx > 0.0 ? d / mx : 0.0, mx};
}

inline float luminance(const Rgb& c) {
  return 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2];
}

inline GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  const auto& src = img.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = luminance(src[i]);
  return out;
}

/// Bilinear sample with edge clamping.
inline float sample_bilinear(const GrayImage& img, double x, double y) {
  const double cx = std::clamp(x, 0.0, img.width() - 1.0);
  const double cy = std::clamp(y, 0.0, img.height() - 1.0);
  const int x0 = std::min(static_cast<int>(cx), img.width() - 2);
  const int y0 = std::min(static_cast<int>(cy), img.height() - 2);
  const double fx = cx - x0, fy = cy - y0;
  const double a = img(x0, y0), b = img(x0 + 1, y0);
  const double c = img(x0, y0 + 1), d = img(x0 + 1, y0 + 1);
  return static_cast<float>((a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy);
}

}  // namespace tscan
