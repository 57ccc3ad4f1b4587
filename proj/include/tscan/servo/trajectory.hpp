#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tscan/errors.hpp"
#include "tscan/se3.hpp"
#include "tscan/tracker/ransac.hpp"

namespace tscan {

struct TrajectoryPoint {
  Vec3 point;   // mm, reference tissue frame
  Vec3 normal;  // unit, facing the camera
  double dwell_s = 1.0;
};

struct ScanTrajectory {
  std::vector<TrajectoryPoint> points;
  double max_spacing_mm = 5.0;

  void validate() const {
    if (points.empty()) throw ConfigError("trajectory is empty");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (std::abs(points[i].normal.norm() - 1.0) > 1e-6) throw ConfigError("trajectory normal is not unit length");
      if (!(points[i].dwell_s > 0.0)) throw ConfigError("dwell time must be positive");
      if (i > 0 && (points[i].point - points[i - 1].point).norm() > max_spacing_mm + 1e-9)
        throw ConfigError("trajectory points are further apart than max_spacing_mm");
    }
  }
};

/// Re-anchors every point and normal by the tissue estimate.
inline ScanTrajectory update_trajectory(const ScanTrajectory& traj, const TissuePoseEstimate& estimate, double now_s,
                                        double timeout_s) {
  if (now_s - estimate.timestamp_s > timeout_s) throw StaleTransform("tissue estimate");
  ScanTrajectory out = traj;
  const Mat3& r = estimate.transform.rotation().matrix();
  for (auto& p : out.points) {
    p.point = estimate.transform.apply(p.point);
    p.normal = r * p.normal;
  }
  return out;
}

}  // namespace tscan
