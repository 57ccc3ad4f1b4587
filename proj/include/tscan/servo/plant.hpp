#pragma once

// Cartesian robot stand-in: commands take effect after a fixed latency and
// the pose follows them as a first-order lag (slerp on rotation).

#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>

#include "tscan/se3.hpp"

namespace tscan {

struct PlantParams {
  double time_constant_s = 0.08;
  double latency_s = 0.04;
};

class RobotPlant {
 public:
  static constexpr int kOrthonormalizePeriod = 100;

  explicit RobotPlant(RigidTransform initial = {}, PlantParams params = {})
      : pose_(initial), target_(initial), params_(params) {
    if (params_.time_constant_s < 0.0 || params_.latency_s < 0.0)
      throw std::invalid_argument("plant time constant and latency must be non-negative");
  }

  const RigidTransform& pose() const { return pose_; }
  double time() const { return time_s_; }
  const PlantParams& params() const { return params_; }

  /// Queues `command` (if any) at the current time, then advances by dt.
  void step(const std::optional<RigidTransform>& command, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("plant step needs dt > 0");
    if (command) queue_.push_back({time_s_ + params_.latency_s, *command});
    const double end = time_s_ + dt;
    double t = time_s_;
    while (true) {
      while (!queue_.empty() && queue_.front().apply_s <= t + kEps) {
        target_ = queue_.front().pose;
        queue_.pop_front();
      }
      if (t >= end - kEps) {
        // A command due exactly now takes effect at once when there is no lag.
        if (params_.time_constant_s == 0.0) pose_ = target_;
        break;
      }
      const double next = queue_.empty() ? end : std::min(end, queue_.front().apply_s);
      advance(next - t);
      t = next;
    }
    time_s_ = end;
    if (++steps_ % kOrthonormalizePeriod == 0) pose_ = pose_.orthonormalized();
  }

 private:
  static constexpr double kEps = 1e-12;

  struct Pending {
    double apply_s;
    RigidTransform pose;
  };

  void advance(double span) {
    if (params_.time_constant_s == 0.0) {
      pose_ = target_;
      return;
    }
    if (span <= 0.0) return;
    pose_ = interpolate(pose_, target_, 1.0 - std::exp(-span / params_.time_constant_s));
  }

  RigidTransform pose_;
  RigidTransform target_;
  PlantParams params_;
  std::deque<Pending> queue_;
  double time_s_ = 0.0;
  long steps_ = 0;
};

/// Value-returning form of RobotPlant::step.
inline RobotPlant plant_step(RobotPlant plant, const std::optional<RigidTransform>& command, double dt) {
  plant.step(command, dt);
  return plant;
}

}  // namespace tscan
