#pragma once

#include <cstdint>

#include "tscan/image.hpp"
#include "tscan/tracker/config.hpp"

namespace tscan {

/// 1 marks a tissue pixel.
using SegmentationMask = Grid<std::uint8_t>;

inline bool inside(const HsvBox& box, const Hsv& c) {
  const bool hue_ok = box.h_lo <= box.h_hi ? (c.h_deg >= box.h_lo && c.h_deg <= box.h_hi)
                                           : (c.h_deg >= box.h_lo || c.h_deg <= box.h_hi);
  return hue_ok && c.s >= box.s_lo && c.s <= box.s_hi && c.v >= box.v_lo && c.v <= box.v_hi;
}

inline SegmentationMask segment_tissue(const RgbImage& image, const HsvBox& box) {
  SegmentationMask mask(image.width(), image.height(), 0);
  const auto& src = image.data();
  auto& dst = mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = inside(box, rgb_to_hsv(src[i])) ? 1 : 0;
  return mask;
}

inline SegmentationMask segment_tissue(const RgbImage& image, const TrackerConfig& config) {
  return segment_tissue(image, config.tissue_hsv);
}

}  // namespace tscan
