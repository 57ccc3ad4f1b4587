#pragma once

// The per-frame tracking loop: segment, track ROIs, gate occlusions,
// estimate the initial-to-current rigid motion, re-anchor stopped ROIs.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tscan/tracker/ransac.hpp"
#include "tscan/tracker/roi.hpp"
#include "tscan/tracker/segmentation.hpp"

namespace tscan {

struct TrackerOptions {
  // Tracking ROIs rejected by the consensus step are stopped so that the
  // next loop can re-anchor them by projection.
  bool stop_ransac_outliers = true;
};

class TissueTracker {
 public:
  TissueTracker(TrackerConfig config, CameraIntrinsics camera, std::uint64_t seed, TrackerOptions options = {})
      : config_(config), camera_(camera), options_(options), rng_(seed) {
    config_.validate();
  }

  /// Selects ROIs on the reference frame. Throws InsufficientTexture.
  void initialize(const RgbImage& image, const OrganizedPointCloud& cloud, double timestamp_s = 0.0) {
    const GrayImage gray = to_gray(image);
    const SegmentationMask mask = segment_tissue(image, config_);
    rois_ = init_rois(gray, mask, cloud, config_);
    prev_gray_ = gray;
    last_ = TissuePoseEstimate{};
    last_.inlier_count = static_cast<int>(rois_.size());
    last_.timestamp_s = timestamp_s;
    initialized_ = true;
  }

  /// One loop. Never throws on tracking failure: a failed consensus returns
  /// the previous estimate with `stale` set.
  TissuePoseEstimate step(const RgbImage& image, const OrganizedPointCloud& cloud, double timestamp_s) {
    if (!initialized_) throw Error("tracker used before initialize()");
    const GrayImage gray = to_gray(image);
    const SegmentationMask mask = segment_tissue(image, config_);

    std::vector<std::size_t> previously_stopped;
    for (std::size_t i = 0; i < rois_.size(); ++i)
      if (!rois_[i].tracking()) previously_stopped.push_back(i);

    rois_ = track_rois(prev_gray_, gray, cloud, std::move(rois_), config_);
    for (auto& roi : rois_)
      if (roi.tracking()) roi.state = check_occlusion(roi, mask, gray, config_);

    std::vector<int> inlier_ids;
    TissuePoseEstimate est;
    bool accepted = false;
    try {
      est = estimate_pose_ransac(rois_, config_, rng_, &inlier_ids);
      est.timestamp_s = timestamp_s;
      accepted = true;
    } catch (const TooFewRois&) {
    } catch (const NoConsensus&) {
    }

    if (accepted) {
      if (options_.stop_ransac_outliers) {
        for (auto& roi : rois_)
          if (roi.tracking() && std::find(inlier_ids.begin(), inlier_ids.end(), roi.id) == inlier_ids.end())
            roi.state = RoiState::Stopped;
      }
      rois_ = reinitialize_rois(std::move(rois_), previously_stopped, est.transform, gray, mask, cloud, camera_,
                                config_);
      last_ = est;
    } else {
      last_.stale = true;
    }
    prev_gray_ = gray;
    return last_;
  }

  const std::vector<Roi>& rois() const { return rois_; }
  const TissuePoseEstimate& last_estimate() const { return last_; }
  const TrackerConfig& config() const { return config_; }
  const CameraIntrinsics& camera() const { return camera_; }
  bool initialized() const { return initialized_; }

 private:
  TrackerConfig config_;
  CameraIntrinsics camera_;
  TrackerOptions options_;
  Rng rng_;
  std::vector<Roi> rois_;
  GrayImage prev_gray_;
  TissuePoseEstimate last_;
  bool initialized_ = false;
};

inline nlohmann::json transform_json(const RigidTransform& t) {
  const auto a = t.to_row_major();
  return nlohmann::json(std::vector<double>(a.begin(), a.end()));
}

/// One JSON-lines record of the tracker log.
inline std::string tracker_log_line(std::size_t frame_index, const TissuePoseEstimate& est,
                                    const std::vector<Roi>& rois) {
  nlohmann::json j;
  j["frame"] = frame_index;
  j["t"] = est.timestamp_s;
  j["pose"] = transform_json(est.transform);
  j["inliers"] = est.inlier_count;
  j["mean_residual_mm"] = est.mean_inlier_residual_mm;
  j["stale"] = est.stale;
  nlohmann::json states = nlohmann::json::array();
  for (const auto& roi : rois) states.push_back({{"id", roi.id}, {"state", to_string(roi.state)},
                                                 {"u", roi.u}, {"v", roi.v}});
  j["rois"] = std::move(states);
  return j.dump();
}

}  // namespace tscan
