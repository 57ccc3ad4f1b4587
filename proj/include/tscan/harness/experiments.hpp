#pragma once

// Experiment drivers. Everything runs on a simulated clock in integer
// milliseconds: the tracker (outer loop) sees a new frame every outer
// period, the servo (inner loop) ticks every inner period, and at
// coincident instants the outer loop runs first. Tracking is assumed to
// take no simulated time.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tscan/cloud_io.hpp"
#include "tscan/harness/metrics.hpp"
#include "tscan/harness/ncc.hpp"
#include "tscan/servo/plant.hpp"
#include "tscan/servo/scan_servo.hpp"
#include "tscan/sim/scene_script.hpp"
#include "tscan/sim/ultrasound.hpp"
#include "tscan/tracker/tissue_tracker.hpp"

namespace tscan {

struct ExperimentConfig {
  std::string kind = "tracking-accuracy";  // tracking-accuracy | servo-accuracy | ncc-stability
  KeyValues raw;
  SceneScript scene;

  TrackerConfig tracker;
  TrackerOptions tracker_options;

  ControlConfig control;
  PlantParams plant;
  ProbeGeometry probe;
  // Robot base seen from the camera's point of view: base_T_camera.
  RigidTransform base_T_camera{Rotation3::about_z(30.0) * Rotation3::about_x(150.0), Vec3(120.0, -60.0, 210.0)};
  int trajectory_points = 1;
  double trajectory_spacing_mm = 2.0;
  double dwell_s = 1.0;
  double stale_abort_fraction = 0.1;
  UltrasoundParams ultrasound;

  std::string output_dir;
  bool dump_frames = false;

  double duration_s() const { return scene.motion.duration_s; }
  std::uint64_t seed() const { return scene.scene.seed; }
};

inline bool valid_experiment_kind(const std::string& k) {
  return k == "tracking-accuracy" || k == "servo-accuracy" || k == "ncc-stability";
}

/// Builds an experiment config from key-values. Besides the scene keys:
///   experiment, outer_rate_hz, inner_rate_hz, stale_timeout_s,
///   motion_compensation, plant.time_constant_s, plant.latency_s,
///   contact_offset_mm, trajectory_points, trajectory_spacing_mm, dwell_s,
///   tracker.roi_count, tracker.occlusion_tissue_fraction,
///   tracker.appearance_match_threshold, tracker.descriptor_max_distance,
///   tracker.ransac_iterations, tracker.ransac_inlier_threshold_mm,
///   tracker.search_window_px, tracker.ncc_floor, tracker.stop_ransac_outliers,
///   output_dir, dump_frames.
inline ExperimentConfig experiment_config_from(const KeyValues& kv) {
  ExperimentConfig c;
  c.raw = kv;
  c.kind = kv.get("experiment", c.kind);
  if (!valid_experiment_kind(c.kind)) throw ConfigError("unknown experiment '" + c.kind + "'");
  c.scene = scene_script_from(kv);

  auto& t = c.tracker;
  t.roi_count = static_cast<int>(kv.integer("tracker.roi_count", t.roi_count));
  t.occlusion_tissue_fraction = kv.number("tracker.occlusion_tissue_fraction", t.occlusion_tissue_fraction);
  t.appearance_match_threshold = kv.number("tracker.appearance_match_threshold", t.appearance_match_threshold);
  t.descriptor_max_distance = kv.number("tracker.descriptor_max_distance", t.descriptor_max_distance);
  t.ransac_iterations = static_cast<int>(kv.integer("tracker.ransac_iterations", t.ransac_iterations));
  t.ransac_inlier_threshold_mm = kv.number("tracker.ransac_inlier_threshold_mm", t.ransac_inlier_threshold_mm);
  t.search_window_px = static_cast<int>(kv.integer("tracker.search_window_px", t.search_window_px));
  t.ncc_floor = kv.number("tracker.ncc_floor", t.ncc_floor);
  t.validate();
  c.tracker_options.stop_ransac_outliers = kv.flag("tracker.stop_ransac_outliers", true);

  c.control.outer_rate_hz = kv.number("outer_rate_hz", c.control.outer_rate_hz);
  c.control.inner_rate_hz = kv.number("inner_rate_hz", c.control.inner_rate_hz);
  c.control.stale_timeout_s = kv.number("stale_timeout_s", c.control.stale_timeout_s);
  c.control.motion_compensation = kv.flag("motion_compensation", true);
  c.control.validate();
  for (double hz : {c.control.outer_rate_hz, c.control.inner_rate_hz}) {
    const double ms = 1000.0 / hz;
    if (std::abs(ms - std::round(ms)) > 1e-9) throw ConfigError("loop periods must be whole milliseconds");
  }

  c.plant.time_constant_s = kv.number("plant.time_constant_s", c.plant.time_constant_s);
  c.plant.latency_s = kv.number("plant.latency_s", c.plant.latency_s);
  if (c.plant.time_constant_s < 0.0 || c.plant.latency_s < 0.0) throw ConfigError("plant parameters must be >= 0");
  c.probe.contact_offset_mm = kv.number("contact_offset_mm", c.probe.contact_offset_mm);

  c.trajectory_points = static_cast<int>(kv.integer("trajectory_points", 1));
  if (c.trajectory_points < 1) throw ConfigError("trajectory_points must be >= 1");
  c.trajectory_spacing_mm = kv.number("trajectory_spacing_mm", c.trajectory_spacing_mm);
  c.dwell_s = kv.number("dwell_s", c.dwell_s);
  if (!(c.dwell_s > 0.0)) throw ConfigError("dwell_s must be positive");

  c.output_dir = kv.get("output_dir", "");
  c.dump_frames = kv.flag("dump_frames", false);
  return c;
}

inline SceneGenerator make_generator(const PhantomSurface& surface, const ExperimentConfig& cfg) {
  return SceneGenerator(surface, make_motion(cfg.scene.motion), cfg.scene.occluders, cfg.scene.scene);
}

inline int period_ms(double hz) { return static_cast<int>(std::lround(1000.0 / hz)); }

/// Rigid motion of the tissue between the reference instant and t, in the
/// camera frame (what the tracker estimates).
inline RigidTransform true_motion(const SceneGenerator& gen, double t, double t_ref = 0.0) {
  return gen.tissue_pose(t) * gen.tissue_pose(t_ref).inverse();
}

/// Tracking error: the tissue frame placed by the estimate vs by ground truth.
inline PoseError tracking_error(const RigidTransform& estimate, const SceneGenerator& gen, double t) {
  const RigidTransform ref = gen.tissue_pose(0.0);
  return pose_error(estimate * ref, true_motion(gen, t) * ref);
}

inline void dump_frame(const ExperimentConfig& cfg, const SceneFrame& f, int index) {
  if (!cfg.dump_frames || cfg.output_dir.empty()) return;
  const auto dir = std::filesystem::path(cfg.output_dir) / "frames";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  char name[32];
  std::snprintf(name, sizeof name, "frame_%05d.tscg", index);
  write_cloud((dir / name).string(), f.cloud);
}

struct TrackingRun {
  MetricsRecord record;
  std::vector<TissuePoseEstimate> estimates;
  std::vector<std::string> log_lines;
};

/// Tracker only: one frame per outer period for the configured duration,
/// each estimate compared with ground truth.
inline TrackingRun run_tracking_accuracy(const ExperimentConfig& cfg) {
  const PhantomSurface surface(cfg.scene.phantom);
  const SceneGenerator gen = make_generator(surface, cfg);
  TissueTracker tracker(cfg.tracker, cfg.scene.scene.camera, cfg.seed(), cfg.tracker_options);

  TrackingRun run;
  run.record.extra_names = {"inliers", "tracking_rois", "stale"};
  const SceneFrame f0 = gen.generate(0.0);
  dump_frame(cfg, f0, 0);
  tracker.initialize(f0.image, f0.cloud, 0.0);
  run.log_lines.push_back(tracker_log_line(0, tracker.last_estimate(), tracker.rois()));

  const int step = period_ms(cfg.control.outer_rate_hz);
  const long end = std::lround(cfg.duration_s() * 1000.0);
  int index = 1;
  for (long ms = step; ms <= end; ms += step, ++index) {
    const double t = ms / 1000.0;
    const SceneFrame f = gen.generate(t);
    dump_frame(cfg, f, index);
    const TissuePoseEstimate est = tracker.step(f.image, f.cloud, t);
    int tracking = 0;
    for (const auto& r : tracker.rois()) tracking += r.tracking();
    run.record.add(t, tracking_error(est.transform, gen, t),
                   {static_cast<double>(est.inlier_count), static_cast<double>(tracking), est.stale ? 1.0 : 0.0});
    run.estimates.push_back(est);
    run.log_lines.push_back(tracker_log_line(static_cast<std::size_t>(index), est, tracker.rois()));
  }
  return run;
}

/// Reference scan trajectory: contact points on the phantom centre line,
/// located in the reference cloud, with normals averaged from the estimated
/// normal map.
inline ScanTrajectory reference_trajectory(const SceneFrame& ref, const SceneGenerator& gen,
                                           const ExperimentConfig& cfg) {
  const CameraIntrinsics& k = gen.config().camera;
  const NormalMap normals = estimate_normals(ref.cloud, k.center());
  ScanTrajectory traj;
  traj.max_spacing_mm = std::max(5.0, 2.0 * cfg.trajectory_spacing_mm);
  const int n = cfg.trajectory_points;
  for (int i = 0; i < n; ++i) {
    const double x = (i - 0.5 * (n - 1)) * cfg.trajectory_spacing_mm;
    const Vec2 px = gen.project_local(Vec3(x, 0.0, gen.surface().height(x, 0.0)), 0.0);
    const int u0 = static_cast<int>(std::lround(px.x())), v0 = static_cast<int>(std::lround(px.y()));
    Vec3 p = Vec3::Zero(), nsum = Vec3::Zero();
    int np = 0, nn = 0;
    for (int dv = -10; dv <= 10; ++dv)
      for (int du = -10; du <= 10; ++du) {
        const int u = u0 + du, v = v0 + dv;
        if (std::abs(du) <= 2 && std::abs(dv) <= 2 && ref.cloud.is_valid(u, v)) {
          p += ref.cloud.points(u, v);
          ++np;
        }
        if (normals.is_valid(u, v)) {
          nsum += normals.normals(u, v);
          ++nn;
        }
      }
    if (np == 0 || nn == 0) throw InsufficientTexture("no depth at a trajectory contact point");
    traj.points.push_back({p / np, nsum.normalized(), n == 1 ? cfg.duration_s() + 1.0 : cfg.dwell_s});
  }
  traj.validate();
  return traj;
}

struct ServoRun {
  MetricsRecord record;
  std::vector<TissuePoseEstimate> estimates;
  std::vector<std::string> command_rows;
  NccSeries ncc;
  int ticks = 0;
  int stale_ticks = 0;
};

/// Closed loop: simulator, tracker, servo and plant. The recorded error
/// compares the observed marker pose with the desired marker pose under the
/// true tissue motion, i.e. where the probe should physically be. The extra
/// `command_*` columns compare against the desired pose the servo itself
/// computed from the tracker estimate at that tick (pure servo lag).
inline ServoRun run_closed_loop(const ExperimentConfig& cfg, bool motion_compensation, bool record_ncc) {
  const PhantomSurface surface(cfg.scene.phantom);
  const SceneGenerator gen = make_generator(surface, cfg);
  TissueTracker tracker(cfg.tracker, cfg.scene.scene.camera, cfg.seed(), cfg.tracker_options);
  LatestValue<TissuePoseEstimate> snapshot;

  const SceneFrame f0 = gen.generate(0.0);
  dump_frame(cfg, f0, 0);
  tracker.initialize(f0.image, f0.cloud, 0.0);
  snapshot.publish(tracker.last_estimate());

  ControlConfig control = cfg.control;
  control.motion_compensation = motion_compensation;
  const ScanTrajectory traj = reference_trajectory(f0, gen, cfg);
  const Vec3 camera_position = cfg.scene.scene.camera.center();
  ScanServo servo(traj, control, cfg.probe, camera_position, &snapshot);

  FrameGraph graph;
  graph.base_T_camera = cfg.base_T_camera;
  graph.ee_T_marker = cfg.probe.ee_T_marker();
  const RigidTransform marker_T_ee = graph.ee_T_marker.inverse();
  const RigidTransform camera_T_base = graph.base_T_camera.inverse();

  RobotPlant plant(graph.base_T_camera * servo.desired_marker(0, RigidTransform()) * marker_T_ee, cfg.plant);

  auto local_slice = [&](double t) {
    const RigidTransform local_T_tip =
        gen.tissue_pose(t).inverse() * camera_T_base * plant.pose() * cfg.probe.ee_T_tip;
    return render_ultrasound_slice(surface, local_T_tip, cfg.ultrasound);
  };

  ServoRun run;
  run.record.extra_names = {"command_translation_mm", "command_rotation_deg", "inliers", "stale"};
  run.ncc.motion_compensation = motion_compensation;
  std::optional<UltrasoundSlice> initial_slice;
  if (record_ncc) initial_slice = local_slice(0.0);

  const int outer = period_ms(control.outer_rate_hz);
  const int inner = period_ms(control.inner_rate_hz);
  const long end = std::lround(cfg.duration_s() * 1000.0);
  std::optional<ServoCommand> last;
  int frame_index = 1;
  for (long ms = 0; ms <= end; ms += std::gcd(outer, inner)) {
    const double t = ms / 1000.0;
    if (ms > 0 && ms % outer == 0) {
      const SceneFrame f = gen.generate(t);
      dump_frame(cfg, f, frame_index++);
      const TissuePoseEstimate est = tracker.step(f.image, f.cloud, t);
      run.estimates.push_back(est);
      snapshot.publish(est);
    }
    if (ms % inner != 0) continue;

    graph.base_T_ee = StampedTransform{plant.pose(), t};
    const RigidTransform camera_T_marker = camera_T_base * plant.pose() * graph.ee_T_marker;
    graph.camera_T_marker = StampedTransform{camera_T_marker, t};

    ++run.ticks;
    bool stale = false;
    try {
      last = servo.step(graph, t);
      stale = motion_compensation && last->stale;
    } catch (const StaleTransform&) {
      stale = true;
    } catch (const EndOfTrajectory&) {
      break;
    }
    if (stale) ++run.stale_ticks;

    const auto est = snapshot.load();
    if (!last) continue;
    const RigidTransform truth_desired = servo.desired_marker(servo.active_index(), true_motion(gen, t));
    const PoseError commanded = pose_error(camera_T_marker, last->camera_T_desired_marker);
    run.record.add(t, pose_error(camera_T_marker, truth_desired),
                   {commanded.translation_mm, commanded.rotation_deg, static_cast<double>(est->inlier_count),
                    stale ? 1.0 : 0.0});
    run.command_rows.push_back(command_csv_row(*last, plant.pose()));
    if (record_ncc) run.ncc.samples.push_back({t, ncc(*initial_slice, local_slice(t))});

    plant.step(last->base_T_ee_command, inner / 1000.0);
  }

  if (run.ticks > 0 && run.stale_ticks > cfg.stale_abort_fraction * run.ticks)
    throw ExperimentAborted("tissue estimate stale on " + std::to_string(run.stale_ticks) + " of " +
                            std::to_string(run.ticks) + " servo ticks");
  return run;
}

inline ServoRun run_servo_accuracy(const ExperimentConfig& cfg) {
  return run_closed_loop(cfg, cfg.control.motion_compensation, false);
}

struct NccRun {
  ServoRun on;
  ServoRun off;
};

/// Paired closed-loop runs with identical seeds, motion compensation on and
/// off; NCC of every inner-loop slice against the first one.
inline NccRun run_ncc_stability(const ExperimentConfig& cfg) {
  NccRun r;
  r.on = run_closed_loop(cfg, true, true);
  r.off = run_closed_loop(cfg, false, true);
  return r;
}

}  // namespace tscan
