#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tscan/sim/ultrasound.hpp"

namespace tscan {

struct NccScore {
  double score = 0.0;
  bool defined = false;  // false when either image has zero variance
};

/// Zero-mean normalized cross-correlation at zero displacement.
inline NccScore ncc(const Grid<float>& a, const Grid<float>& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw std::invalid_argument("ncc needs equal sizes");
  const std::size_t n = a.size();
  if (n == 0) return {};
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.data()[i];
    mb += b.data()[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.data()[i] - ma, y = b.data()[i] - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return {};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), true};
}

inline NccScore ncc(const UltrasoundSlice& a, const UltrasoundSlice& b) { return ncc(a.pixels, b.pixels); }

}  // namespace tscan
