#pragma once

// Inner-loop position-based servo: picks the active trajectory point,
// re-anchors it with the newest tissue estimate, synthesizes the desired
// marker pose and evaluates the control law.

#include <cstdio>
#include <ostream>
#include <string>

#include "tscan/errors.hpp"
#include "tscan/servo/frame_graph.hpp"
#include "tscan/servo/probe.hpp"
#include "tscan/servo/snapshot.hpp"
#include "tscan/servo/trajectory.hpp"

namespace tscan {

struct ControlConfig {
  double inner_rate_hz = 25.0;
  double outer_rate_hz = 10.0;
  double stale_timeout_s = 0.5;
  bool motion_compensation = true;

  void validate() const {
    if (!(outer_rate_hz > 0.0) || !(inner_rate_hz >= outer_rate_hz))
      throw ConfigError("loop rates must satisfy inner >= outer > 0");
    if (!(stale_timeout_s > 0.0)) throw ConfigError("stale timeout must be positive");
  }
};

struct ServoCommand {
  double t_s = 0.0;
  RigidTransform base_T_ee_command;
  RigidTransform camera_T_desired_marker;
  std::size_t active_index = 0;
  bool stale = false;  // estimate in use was flagged stale by the tracker
};

class ScanServo {
 public:
  ScanServo(ScanTrajectory reference, ControlConfig config, ProbeGeometry probe, Vec3 camera_position,
            const LatestValue<TissuePoseEstimate>* estimates)
      : reference_(std::move(reference)),
        config_(config),
        probe_(probe),
        camera_position_(camera_position),
        estimates_(estimates) {
    reference_.validate();
    config_.validate();
  }

  const ScanTrajectory& reference() const { return reference_; }
  const ControlConfig& config() const { return config_; }
  const ProbeGeometry& probe() const { return probe_; }
  std::size_t active_index() const { return active_; }

  /// Desired marker pose (camera frame) for trajectory point `index` under
  /// tissue motion `motion`.
  RigidTransform desired_marker(std::size_t index, const RigidTransform& motion) const {
    const auto& p = reference_.points.at(index);
    return desired_marker_pose(motion.apply(p.point), motion.rotation().matrix() * p.normal, camera_position_, probe_);
  }

  /// One inner-loop tick. `graph` must carry fresh robot and marker
  /// measurements; its tissue factors are rewritten here.
  ServoCommand step(FrameGraph& graph, double now_s) {
    if (!started_) {
      started_ = true;
      point_start_s_ = now_s;
    }
    while (now_s - point_start_s_ >= reference_.points[active_].dwell_s - 1e-9) {
      if (active_ + 1 >= reference_.points.size()) throw EndOfTrajectory();
      point_start_s_ += reference_.points[active_].dwell_s;
      ++active_;
    }

    const auto est = estimates_ ? estimates_->load() : std::nullopt;
    if (!est) throw StaleTransform("tissue estimate");
    // With compensation off the trajectory stays frozen in the reference frame.
    RigidTransform motion;
    TrajectoryPoint target = reference_.points[active_];
    if (config_.motion_compensation) {
      target = update_trajectory(reference_, *est, now_s, config_.stale_timeout_s).points[active_];
      motion = est->transform;
    }
    const RigidTransform camera_T_contact = RigidTransform::translation(reference_.points[active_].point);
    const RigidTransform contact_T_moved = camera_T_contact.inverse() * motion * camera_T_contact;
    const RigidTransform camera_T_desired =
        desired_marker_pose(target.point, target.normal, camera_position_, probe_);
    const RigidTransform moved_T_desired = (camera_T_contact * contact_T_moved).inverse() * camera_T_desired;

    graph.camera_T_contact = StampedTransform{camera_T_contact, point_start_s_};
    graph.contact_T_moved = StampedTransform{contact_T_moved, config_.motion_compensation ? est->timestamp_s : now_s};

    ServoCommand cmd;
    cmd.t_s = now_s;
    cmd.base_T_ee_command = control_law(graph, moved_T_desired, now_s, config_.stale_timeout_s);
    cmd.camera_T_desired_marker = camera_T_desired;
    cmd.active_index = active_;
    cmd.stale = est->stale;
    return cmd;
  }

 private:
  ScanTrajectory reference_;
  ControlConfig config_;
  ProbeGeometry probe_;
  Vec3 camera_position_;
  const LatestValue<TissuePoseEstimate>* estimates_;
  std::size_t active_ = 0;
  double point_start_s_ = 0.0;
  bool started_ = false;
};

inline std::string command_csv_header() {
  std::string h = "t";
  for (int i = 0; i < 12; ++i) h += ",cmd" + std::to_string(i);
  for (int i = 0; i < 12; ++i) h += ",plant" + std::to_string(i);
  return h + ",active_index,stale";
}

/// One command-log row: t, commanded pose (12, row-major), plant pose (12),
/// active trajectory index, stale flag.
inline std::string command_csv_row(const ServoCommand& cmd, const RigidTransform& plant_pose) {
  char buf[32];
  std::string row;
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    if (!row.empty()) row += ',';
    row += buf;
  };
  put(cmd.t_s);
  for (double x : cmd.base_T_ee_command.to_row_major()) put(x);
  for (double x : plant_pose.to_row_major()) put(x);
  row += ',' + std::to_string(cmd.active_index) + ',' + (cmd.stale ? "1" : "0");
  return row;
}

}  // namespace tscan
