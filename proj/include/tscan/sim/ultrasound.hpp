#pragma once

// Ultrasound slice sampling. The probe frame has its origin at the tip, z
// along the probe axis into the tissue and x along the lateral imaging axis;
// the slice spans the x-z plane of that frame.

#include <cstdint>

#include "tscan/image.hpp"
#include "tscan/se3.hpp"
#include "tscan/sim/phantom.hpp"

namespace tscan {

struct UltrasoundParams {
  double lateral_half_width_mm = 10.0;
  double depth_mm = 25.0;
  double spacing_mm = 0.5;
};

struct UltrasoundSlice {
  // Column index is lateral position, row index is depth.
  Grid<float> pixels;
  bool in_contact = false;

  bool all_zero() const {
    for (float x : pixels.data())
      if (x != 0.0f) return false;
    return true;
  }
};

/// Samples the phantom volume on the probe's imaging plane. `local_T_probe`
/// is the probe tip frame in phantom-local coordinates. A tip above the
/// surface (or off the patch) has no acoustic coupling and yields the
/// all-zero slice.
inline UltrasoundSlice render_ultrasound_slice(const PhantomSurface& surface, const RigidTransform& local_T_probe,
                                               const UltrasoundParams& params = {}) {
  const int cols = static_cast<int>(2.0 * params.lateral_half_width_mm / params.spacing_mm + 0.5) + 1;
  const int rows = static_cast<int>(params.depth_mm / params.spacing_mm + 0.5) + 1;
  UltrasoundSlice out{Grid<float>(cols, rows, 0.0f), false};

  const Vec3 tip = local_T_probe.translation();
  if (!surface.contains(tip.x(), tip.y()) || tip.z() > surface.height(tip.x(), tip.y())) return out;
  out.in_contact = true;

  for (int r = 0; r < rows; ++r) {
    const double depth = r * params.spacing_mm;
    for (int c = 0; c < cols; ++c) {
      const double lateral = -params.lateral_half_width_mm + c * params.spacing_mm;
      const Vec3 q = local_T_probe.apply(Vec3(lateral, 0.0, depth));
      if (!surface.contains(q.x(), q.y()) || q.z() > surface.height(q.x(), q.y())) continue;
      out.pixels(c, r) = surface.volume(q.x(), q.y(), q.z());
    }
  }
  return out;
}

}  // namespace tscan
