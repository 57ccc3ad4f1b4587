#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "tscan/errors.hpp"
#include "tscan/tracker/config.hpp"
#include "tscan/tracker/kabsch.hpp"
#include "tscan/tracker/roi.hpp"

namespace tscan {

using Rng = std::mt19937_64;

/// Uniform index in [0, n). Modulo reduction keeps the sequence identical
/// across standard library implementations.
inline std::size_t uniform_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

struct TissuePoseEstimate {
  RigidTransform transform;
  int inlier_count = 0;
  double mean_inlier_residual_mm = 0.0;
  // Set when this loop failed and the value repeats the previous estimate.
  bool stale = false;
  // Time of the frame this estimate was computed from.
  double timestamp_s = 0.0;
};

struct RansacResult {
  RigidTransform transform;
  std::vector<std::size_t> inliers;
  double mean_inlier_residual_mm = 0.0;
};

/// Three-point RANSAC over corresponded points. The kept hypothesis has the
/// most inliers; ties go to the lower mean inlier residual, then to the
/// earlier hypothesis. The result is re-fit on all inliers of that hypothesis.
inline RansacResult ransac_rigid(std::span<const Vec3> initial, std::span<const Vec3> current, int iterations,
                                 double inlier_threshold_mm, Rng& rng) {
  const std::size_t n = initial.size();
  if (n < 3 || current.size() != n) throw TooFewRois("RANSAC needs at least three correspondences");

  std::vector<std::size_t> best_inliers;
  double best_mean = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> inliers;
  inliers.reserve(n);
  for (int it = 0; it < iterations; ++it) {
    const std::size_t a = uniform_index(rng, n);
    std::size_t b = uniform_index(rng, n - 1);
    if (b >= a) ++b;
    std::size_t c = uniform_index(rng, n - 2);
    for (std::size_t lo : {std::min(a, b), std::max(a, b)})
      if (c >= lo) ++c;

    const Vec3 si[3] = {initial[a], initial[b], initial[c]};
    const Vec3 sc[3] = {current[a], current[b], current[c]};
    RigidTransform hypothesis;
    try {
      hypothesis = kabsch_fit(si, sc);
    } catch (const DegenerateGeometry&) {
      continue;
    }

    inliers.clear();
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = (hypothesis.apply(initial[k]) - current[k]).norm();
      if (r <= inlier_threshold_mm) {
        inliers.push_back(k);
        sum += r;
      }
    }
    const double mean = inliers.empty() ? std::numeric_limits<double>::infinity() : sum / inliers.size();
    if (inliers.size() > best_inliers.size() || (inliers.size() == best_inliers.size() && mean < best_mean)) {
      best_inliers = inliers;
      best_mean = mean;
    }
  }
  if (best_inliers.size() < 3) throw NoConsensus("no hypothesis reached three inliers");

  std::vector<Vec3> in_i, in_c;
  for (std::size_t k : best_inliers) {
    in_i.push_back(initial[k]);
    in_c.push_back(current[k]);
  }
  RansacResult out;
  out.transform = kabsch_fit(in_i, in_c);
  out.inliers = std::move(best_inliers);
  double sum = 0.0;
  for (std::size_t k = 0; k < in_i.size(); ++k) sum += (out.transform.apply(in_i[k]) - in_c[k]).norm();
  out.mean_inlier_residual_mm = sum / in_i.size();
  return out;
}

/// Pose estimate from the Tracking ROIs only. Stopped ROIs are filtered out
/// before any random draw, so they cannot perturb the sample sequence.
inline TissuePoseEstimate estimate_pose_ransac(std::span<const Roi> rois, const TrackerConfig& config, Rng& rng,
                                               std::vector<int>* inlier_ids = nullptr) {
  std::vector<Vec3> initial, current;
  std::vector<int> ids;
  for (const auto& roi : rois) {
    if (!roi.tracking()) continue;
    initial.push_back(roi.reference_point);
    current.push_back(roi.current_point);
    ids.push_back(roi.id);
  }
  if (initial.size() < 3) throw TooFewRois("fewer than three Tracking ROIs");
  const RansacResult r =
      ransac_rigid(initial, current, config.ransac_iterations, config.ransac_inlier_threshold_mm, rng);
  if (inlier_ids) {
    inlier_ids->clear();
    for (std::size_t k : r.inliers) inlier_ids->push_back(ids[k]);
  }
  TissuePoseEstimate est;
  est.transform = r.transform;
  est.inlier_count = static_cast<int>(r.inliers.size());
  est.mean_inlier_residual_mm = r.mean_inlier_residual_mm;
  return est;
}

}  // namespace tscan
