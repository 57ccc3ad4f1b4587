#pragma once

// Patch appearance: a 32-bin intensity histogram plus a binary intensity-test
// signature (BRIEF-style pixel-pair comparisons on a box-smoothed patch).
// The signature stands in for a keypoint descriptor and can be replaced.

#include <algorithm>
#include <array>
#include <bitset>
#include <cmath>
#include <random>
#include <vector>

#include "tscan/image.hpp"

namespace tscan {

struct PixelRect {
  int u = 0;
  int v = 0;
  int width = 0;
  int height = 0;

  bool inside(int image_width, int image_height) const {
    return u >= 0 && v >= 0 && u + width <= image_width && v + height <= image_height;
  }
  bool intersects(const PixelRect& o) const {
    return u < o.u + o.width && o.u < u + width && v < o.v + o.height && o.v < v + height;
  }
};

inline constexpr int kHistogramBins = 32;
inline constexpr int kSignatureBits = 256;

struct AppearanceDescriptor {
  std::array<double, kHistogramBins> intensity_histogram{};
  std::bitset<kSignatureBits> keypoint_signature;
};

namespace detail {

struct PairPattern {
  // Normalized coordinates in [0, 1) for both endpoints of every test.
  std::array<std::array<double, 4>, kSignatureBits> tests;
};

inline const PairPattern& signature_pattern() {
  static const PairPattern pattern = [] {
    PairPattern p{};
    std::mt19937 gen(0x7153u);
    for (auto& t : p.tests)
      for (auto& c : t) c = (gen() % 1000u) / 1000.0;
    return p;
  }();
  return pattern;
}

}  // namespace detail

inline AppearanceDescriptor describe_patch(const GrayImage& img, const PixelRect& r) {
  AppearanceDescriptor d;
  const double weight = 1.0 / (static_cast<double>(r.width) * r.height);
  for (int v = r.v; v < r.v + r.height; ++v)
    for (int u = r.u; u < r.u + r.width; ++u) {
      const int bin = std::clamp(static_cast<int>(img(u, v) / (256.0 / kHistogramBins)), 0, kHistogramBins - 1);
      d.intensity_histogram[bin] += weight;
    }

  // 3x3 box smoothing inside the patch, clamped at its border.
  auto smoothed = [&](int pu, int pv) {
    double s = 0.0;
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        const int x = std::clamp(pu + du, r.u, r.u + r.width - 1);
        const int y = std::clamp(pv + dv, r.v, r.v + r.height - 1);
        s += img(x, y);
      }
    return s;
  };
  const auto& pattern = detail::signature_pattern();
  for (int i = 0; i < kSignatureBits; ++i) {
    const auto& t = pattern.tests[i];
    const int u1 = r.u + static_cast<int>(t[0] * r.width), v1 = r.v + static_cast<int>(t[1] * r.height);
    const int u2 = r.u + static_cast<int>(t[2] * r.width), v2 = r.v + static_cast<int>(t[3] * r.height);
    d.keypoint_signature[i] = smoothed(u1, v1) < smoothed(u2, v2);
  }
  return d;
}

inline double bhattacharyya(const AppearanceDescriptor& a, const AppearanceDescriptor& b) {
  double bc = 0.0;
  for (int i = 0; i < kHistogramBins; ++i) bc += std::sqrt(a.intensity_histogram[i] * b.intensity_histogram[i]);
  return std::min(bc, 1.0);
}

inline double signature_distance(const AppearanceDescriptor& a, const AppearanceDescriptor& b) {
  return static_cast<double>((a.keypoint_signature ^ b.keypoint_signature).count()) / kSignatureBits;
}

}  // namespace tscan
