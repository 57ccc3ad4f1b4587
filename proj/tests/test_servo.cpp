#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "test_util.hpp"
#include "tscan/servo/plant.hpp"
#include "tscan/servo/scan_servo.hpp"

using namespace tscan;
using namespace tscan::testing;

namespace {

Mat4 m4(const RigidTransform& t) { return homogeneous(t.rotation().matrix(), t.translation()); }

const RigidTransform kBaseTCamera{Rotation3::about_z(30.0) * Rotation3::about_x(150.0), Vec3(120.0, -60.0, 210.0)};

ScanTrajectory one_point(const Vec3& p, const Vec3& n, double dwell = 100.0) {
  ScanTrajectory t;
  t.points.push_back({p, n.normalized(), dwell});
  return t;
}

// Marker observation consistent with the robot's true pose.
void observe(FrameGraph& g, const RigidTransform& base_T_ee, double now) {
  g.base_T_ee = StampedTransform{base_T_ee, now};
  g.camera_T_marker = StampedTransform{g.base_T_camera.inverse() * base_T_ee * g.ee_T_marker, now};
}

TissuePoseEstimate estimate(const RigidTransform& m, double stamp) {
  TissuePoseEstimate e;
  e.transform = m;
  e.timestamp_s = stamp;
  e.inlier_count = 12;
  return e;
}

}  // namespace

// ---------------------------------------------------------------- desired pose

TEST(DesiredPose, HandWorkedExample) {
  // Contact straight ahead, camera off to the side along +x.
  const Vec3 contact(0, 0, 100), normal(0, 0, -1), camera(100, 0, 0);
  const RigidTransform tip = desired_tip_pose(contact, normal, camera);
  Mat3 expected;
  expected << 0, 1, 0,
              -1, 0, 0,
              0, 0, 1;
  EXPECT_LT((tip.rotation().matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((tip.translation() - Vec3(0, 0, 101)).norm(), 1e-12);

  const ProbeGeometry probe;
  const RigidTransform marker = desired_marker_pose(contact, normal, camera);
  EXPECT_LT(max_abs_diff(marker, tip * probe.tip_T_marker), 1e-12);
  // Marker face (its +z) turns toward +x; its origin sits 40 mm back along the
  // shaft and 8 mm toward the face.
  EXPECT_LT((marker.rotation().matrix().col(2) - Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((marker.translation() - Vec3(8, 0, 61)).norm(), 1e-12);
}

TEST(DesiredPose, AxisOpposesNormalForRandomNormals) {
  std::mt19937_64 gen(21);
  const ProbeGeometry probe;
  int checked = 0;
  while (checked < 100) {
    const Vec3 contact = Vec3(0, 0, 150) + random_vec(gen, 20.0);
    Vec3 n = random_vec(gen, 1.0);
    n.z() = -std::abs(n.z()) - 0.2;
    n.normalize();
    const Vec3 camera = random_vec(gen, 30.0);
    RigidTransform tip;
    try {
      tip = desired_tip_pose(contact, n, camera, probe);
    } catch (const DegenerateGeometry&) {
      continue;
    }
    ++checked;
    const Mat3 r = tip.rotation().matrix();
    EXPECT_TRUE(Rotation3::is_rotation(r, 1e-9));
    EXPECT_NEAR(r.col(2).dot(n), -1.0, 1e-12);
    EXPECT_LT((tip.translation() - (contact - probe.contact_offset_mm * n)).norm(), 1e-12);
    const Vec3 face = r * probe.face_normal_in_tip();
    EXPECT_NEAR(face.dot(n), 0.0, 1e-12);
    EXPECT_GT(face.dot(camera - contact), 0.0);
  }
}

TEST(DesiredPose, RollMatchesBruteForceSweep) {
  std::mt19937_64 gen(22);
  const ProbeGeometry probe;
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 contact = Vec3(0, 0, 150) + random_vec(gen, 20.0);
    const Vec3 n = Vec3(random_vec(gen, 0.5).x(), random_vec(gen, 0.5).y(), -1.0).normalized();
    const Vec3 camera = Vec3(60, -40, 0) + random_vec(gen, 20.0);
    const RigidTransform tip = desired_tip_pose(contact, n, camera, probe);
    const Vec3 to_camera = (camera - contact).normalized();

    // Sweep the roll about the probe axis in 0.1 degree steps and keep the
    // one whose marker face looks most directly at the camera.
    double best_score = -2.0, best_deg = 0.0;
    for (int i = 0; i < 3600; ++i) {
      const Rotation3 roll = Rotation3::axis_angle(-n, 0.1 * i);
      const Vec3 face = roll * (tip.rotation() * probe.face_normal_in_tip());
      const double s = face.dot(to_camera);
      if (s > best_score) best_score = s, best_deg = 0.1 * i;
    }
    EXPECT_TRUE(best_deg <= 0.1 || best_deg >= 359.9) << "best roll offset " << best_deg;
  }
}

TEST(DesiredPose, DegenerateAndInvalidInput) {
  EXPECT_THROW(desired_tip_pose(Vec3(0, 0, 100), Vec3(0, 0, -1), Vec3::Zero()), DegenerateGeometry);
  // Within a degree of the axis is still degenerate.
  const Vec3 camera = Vec3(100.0 * std::tan(deg2rad(0.5)), 0, 0);
  EXPECT_THROW(desired_tip_pose(Vec3(0, 0, 100), Vec3(0, 0, -1), camera), DegenerateGeometry);
  EXPECT_NO_THROW(desired_tip_pose(Vec3(0, 0, 100), Vec3(0, 0, -1), Vec3(100.0 * std::tan(deg2rad(2.0)), 0, 0)));
  EXPECT_THROW(desired_tip_pose(Vec3(0, 0, 100), Vec3(0, 0, -2), Vec3(50, 0, 0)), std::invalid_argument);
}

// ---------------------------------------------------------------- control law

TEST(ControlLaw, MatchesExplicitMatrixProduct) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    FrameGraph g;
    g.base_T_camera = random_transform(gen);
    g.ee_T_marker = random_transform(gen, 50.0);
    g.base_T_ee = StampedTransform{random_transform(gen), 1.0};
    g.camera_T_marker = StampedTransform{random_transform(gen), 1.0};
    g.camera_T_contact = StampedTransform{random_transform(gen), 0.0};
    g.contact_T_moved = StampedTransform{random_transform(gen, 5.0), 1.0};
    const RigidTransform x = random_transform(gen, 20.0);
    const Mat4 expected = m4(g.base_T_ee->value) * m4(g.ee_T_marker) * m4(g.camera_T_marker->value).inverse() *
                          m4(g.camera_T_contact->value) * m4(g.contact_T_moved->value) * m4(x) *
                          m4(g.ee_T_marker).inverse();
    const RigidTransform cmd = control_law(g, x, 1.2, 0.5);
    EXPECT_LT((cmd.matrix() - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ControlLaw, RobotAtGoalIsAFixedPoint) {
  std::mt19937_64 gen(32);
  const ProbeGeometry probe;
  FrameGraph g;
  g.base_T_camera = kBaseTCamera;
  g.ee_T_marker = probe.ee_T_marker();
  const RigidTransform camera_T_desired = random_transform(gen, 50.0);
  const RigidTransform goal = g.base_T_camera * camera_T_desired * g.ee_T_marker.inverse();
  observe(g, goal, 2.0);
  g.camera_T_contact = StampedTransform{RigidTransform::translation(Vec3(5, 3, 150)), 0.0};
  g.contact_T_moved = StampedTransform{RigidTransform(), 2.0};
  const RigidTransform x = (g.camera_T_contact->value).inverse() * camera_T_desired;
  EXPECT_LT(max_abs_diff(control_law(g, x, 2.0, 0.5), goal), 1e-9);

  // From anywhere else, consistent measurements command the same goal.
  observe(g, random_transform(gen), 2.0);
  EXPECT_LT(max_abs_diff(control_law(g, x, 2.0, 0.5), goal), 1e-9);
}

TEST(ControlLaw, TranslatingTheContactConjugatesTheCommand) {
  std::mt19937_64 gen(33);
  FrameGraph g;
  g.base_T_camera = kBaseTCamera;
  g.ee_T_marker = ProbeGeometry{}.ee_T_marker();
  observe(g, random_transform(gen), 0.0);
  g.camera_T_contact = StampedTransform{RigidTransform::translation(Vec3(-4, 9, 140)), 0.0};
  const RigidTransform x = random_transform(gen, 10.0);
  g.contact_T_moved = StampedTransform{RigidTransform(), 0.0};
  const RigidTransform c0 = control_law(g, x, 0.0, 0.5);
  for (int i = 0; i < 10; ++i) {
    const Vec3 d = random_vec(gen, 3.0);
    g.contact_T_moved = StampedTransform{RigidTransform::translation(d), 0.0};
    const RigidTransform expected = g.base_T_camera * RigidTransform::translation(d) * g.base_T_camera.inverse() * c0;
    EXPECT_LT(max_abs_diff(control_law(g, x, 0.0, 0.5), expected), 1e-9);
  }
}

TEST(ControlLaw, ChangingTheBaseFrameMovesTheCommandAlong) {
  std::mt19937_64 gen(34);
  FrameGraph g;
  g.base_T_camera = kBaseTCamera;
  g.ee_T_marker = ProbeGeometry{}.ee_T_marker();
  observe(g, random_transform(gen), 0.0);
  g.camera_T_contact = StampedTransform{random_transform(gen, 100.0), 0.0};
  g.contact_T_moved = StampedTransform{random_transform(gen, 3.0), 0.0};
  const RigidTransform x = random_transform(gen, 10.0);
  const RigidTransform c = control_law(g, x, 0.0, 0.5);

  const RigidTransform w = random_transform(gen);  // new base := w * old base
  FrameGraph h = g;
  h.base_T_camera = w * g.base_T_camera;
  h.base_T_ee->value = w * g.base_T_ee->value;
  EXPECT_LT(max_abs_diff(control_law(h, x, 0.0, 0.5), w * c), 1e-9);
}

TEST(ControlLaw, StaleFactorsAreNamed) {
  FrameGraph g;
  g.base_T_ee = StampedTransform{RigidTransform(), 0.0};
  g.camera_T_marker = StampedTransform{RigidTransform(), 1.0};
  g.camera_T_contact = StampedTransform{RigidTransform(), -100.0};  // old is fine
  g.contact_T_moved = StampedTransform{RigidTransform(), 1.0};
  try {
    control_law(g, RigidTransform(), 1.0, 0.5);
    FAIL() << "expected StaleTransform";
  } catch (const StaleTransform& e) {
    EXPECT_EQ(e.factor, "base_T_ee");
  }
  g.base_T_ee->stamp_s = 0.6;
  EXPECT_NO_THROW(control_law(g, RigidTransform(), 1.0, 0.5));
  g.contact_T_moved.reset();
  try {
    control_law(g, RigidTransform(), 1.0, 0.5);
    FAIL() << "expected StaleTransform";
  } catch (const StaleTransform& e) {
    EXPECT_EQ(e.factor, "contact_T_moved");
  }
}

// ---------------------------------------------------------------- trajectory

TEST(Trajectory, UpdateAppliesTheEstimate) {
  ScanTrajectory t;
  t.max_spacing_mm = 10.0;
  for (int i = 0; i < 4; ++i) t.points.push_back({Vec3(2.0 * i, 1.0, 150.0), Vec3(0.1 * i, 0, -1).normalized()});
  t.validate();

  const auto same = update_trajectory(t, estimate(RigidTransform(), 1.0), 1.0, 0.5);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(same.points[i].point, t.points[i].point);

  const auto shifted = update_trajectory(t, estimate(RigidTransform::translation(Vec3(0, 0, 3)), 1.0), 1.2, 0.5);
  EXPECT_LT((shifted.points[2].point - Vec3(4, 1, 153)).norm(), 1e-12);
  EXPECT_LT((shifted.points[2].normal - t.points[2].normal).norm(), 1e-15);

  std::mt19937_64 gen(41);
  const RigidTransform m = random_transform(gen, 5.0);
  const auto moved = update_trajectory(t, estimate(m, 1.0), 1.0, 0.5);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(moved.points[i].normal.norm(), 1.0, 1e-12);
    EXPECT_NEAR(moved.points[i].normal.dot(m.rotation() * t.points[i].normal), 1.0, 1e-12);
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR((moved.points[i].point - moved.points[j].point).norm(),
                  (t.points[i].point - t.points[j].point).norm(), 1e-9);
  }
  EXPECT_THROW(update_trajectory(t, estimate(m, 1.0), 1.6, 0.5), StaleTransform);
}

TEST(Trajectory, ValidationCatchesBadPoints) {
  ScanTrajectory t;
  EXPECT_THROW(t.validate(), ConfigError);
  t.points.push_back({Vec3(0, 0, 100), Vec3(0, 0, -2)});
  EXPECT_THROW(t.validate(), ConfigError);
  t.points[0].normal = Vec3(0, 0, -1);
  t.points.push_back({Vec3(6, 0, 100), Vec3(0, 0, -1)});
  EXPECT_THROW(t.validate(), ConfigError);
  t.points[1].point.x() = 5.0;
  EXPECT_NO_THROW(t.validate());
  t.points[1].dwell_s = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

// ---------------------------------------------------------------- plant

TEST(Plant, ZeroLagFollowsExactly) {
  std::mt19937_64 gen(51);
  RobotPlant p(RigidTransform(), PlantParams{0.0, 0.0});
  for (int i = 0; i < 10; ++i) {
    const RigidTransform c = random_transform(gen);
    p.step(c, 0.04);
    EXPECT_LT(max_abs_diff(p.pose(), c), 1e-12);
  }
}

TEST(Plant, FirstOrderResponse) {
  const RigidTransform target = RigidTransform::translation(Vec3(10, 0, 0));
  RobotPlant p(RigidTransform(), PlantParams{0.08, 0.0});
  p.step(target, 0.08);
  EXPECT_NEAR(p.pose().translation().x(), 10.0 * (1.0 - std::exp(-1.0)), 1e-9);
  for (int i = 0; i < 19; ++i) p.step(std::nullopt, 0.08);
  EXPECT_LT(max_abs_diff(p.pose(), target), 10.0 * std::exp(-20.0) + 1e-12);

  // Splitting time into many small steps gives the same curve.
  RobotPlant q(RigidTransform(), PlantParams{0.08, 0.0});
  q.step(target, 0.01);
  for (int i = 0; i < 7; ++i) q.step(std::nullopt, 0.01);
  EXPECT_NEAR(q.pose().translation().x(), 10.0 * (1.0 - std::exp(-1.0)), 1e-9);
}

TEST(Plant, RotationFollowsGeodesic) {
  const RigidTransform target = RigidTransform::rotation(Rotation3::about_z(40.0));
  RobotPlant p(RigidTransform(), PlantParams{0.1, 0.0});
  p.step(target, 0.1);
  EXPECT_NEAR(p.pose().rotation().angle_deg(), 40.0 * (1.0 - std::exp(-1.0)), 1e-9);
}

TEST(Plant, LatencyDelaysCommands) {
  const RigidTransform target = RigidTransform::translation(Vec3(0, 5, 0));
  RobotPlant p(RigidTransform(), PlantParams{0.0, 0.04});
  p.step(target, 0.02);
  EXPECT_EQ(p.pose().translation(), Vec3::Zero());
  p.step(std::nullopt, 0.02);
  EXPECT_LT(max_abs_diff(p.pose(), target), 1e-12);
}

TEST(Plant, StaysOrthonormalAndValidates) {
  std::mt19937_64 gen(52);
  RobotPlant p(random_transform(gen), PlantParams{});
  for (int i = 0; i < 1000; ++i) p.step(random_transform(gen), 0.04);
  EXPECT_TRUE(Rotation3::is_rotation(p.pose().rotation().matrix(), 1e-9));
  EXPECT_THROW(RobotPlant(RigidTransform(), PlantParams{-1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(p.step(std::nullopt, 0.0), std::invalid_argument);

  RobotPlant a, b;
  const RigidTransform c = random_transform(gen);
  a.step(c, 0.05);
  EXPECT_TRUE(plant_step(b, c, 0.05).pose().matrix() == a.pose().matrix());
  EXPECT_EQ(b.pose().translation(), Vec3::Zero());
}

// ---------------------------------------------------------------- servo loop

namespace {

struct Loop {
  LatestValue<TissuePoseEstimate> estimates;
  ProbeGeometry probe;
  FrameGraph graph;
  RobotPlant plant;
  ScanServo servo;

  Loop(const ScanTrajectory& traj, ControlConfig cfg, PlantParams plant_params)
      : servo(traj, cfg, probe, Vec3::Zero(), &estimates) {
    graph.base_T_camera = kBaseTCamera;
    graph.ee_T_marker = probe.ee_T_marker();
    plant = RobotPlant(kBaseTCamera * RigidTransform::translation(Vec3(10, -5, 60)), plant_params);
    estimates.publish(estimate(RigidTransform(), 0.0));
  }

  RigidTransform marker() const { return graph.base_T_camera.inverse() * plant.pose() * graph.ee_T_marker; }

  ServoCommand tick(double now, double dt = 0.04) {
    observe(graph, plant.pose(), now);
    ServoCommand c = servo.step(graph, now);
    plant.step(c.base_T_ee_command, dt);
    return c;
  }
};

}  // namespace

TEST(ScanServo, StaticTissueConverges) {
  const Vec3 p(2, -3, 150), n = Vec3(0.1, 0.2, -1).normalized();
  Loop loop(one_point(p, n), ControlConfig{}, PlantParams{0.0, 0.0});
  for (int i = 0; i < 10; ++i) {
    loop.estimates.publish(estimate(RigidTransform(), 0.04 * i));
    loop.tick(0.04 * i);
  }
  const auto e = pose_error(loop.marker(), desired_marker_pose(p, n, Vec3::Zero()));
  EXPECT_LT(e.translation_mm, 0.01);
  EXPECT_LT(e.rotation_deg, 0.01);
}

TEST(ScanServo, StepMotionSettlesWithinFiveTimeConstants) {
  const Vec3 p(0, 0, 150), n = Vec3(0.05, -0.1, -1).normalized();
  const PlantParams plant{0.08, 0.04};
  Loop loop(one_point(p, n), ControlConfig{}, plant);
  const RigidTransform step = RigidTransform::translation(Vec3(0, 0, 3));
  const int step_tick = 25;  // t = 1.0 s
  const int settle_tick = step_tick + static_cast<int>(std::lround(5.0 * plant.time_constant_s / 0.04));
  for (int i = 0; i <= settle_tick; ++i) {
    const double t = 0.04 * i;
    loop.estimates.publish(estimate(i >= step_tick ? step : RigidTransform(), t));
    loop.tick(t);
  }
  const auto e = pose_error(loop.marker(), desired_marker_pose(step.apply(p), n, Vec3::Zero()));
  EXPECT_LT(e.translation_mm, 0.1);
}

TEST(ScanServo, StaleEstimateStopsCompensation) {
  const Vec3 p(0, 0, 150), n = Vec3(0.2, 0, -1).normalized();
  Loop loop(one_point(p, n), ControlConfig{}, PlantParams{});
  loop.tick(0.0);
  loop.tick(0.48);
  EXPECT_THROW(loop.tick(0.52), StaleTransform);

  ControlConfig off;
  off.motion_compensation = false;
  Loop open(one_point(p, n), off, PlantParams{});
  open.estimates.publish(estimate(RigidTransform::translation(Vec3(3, 0, 0)), 0.0));
  const auto c = open.tick(5.0);
  EXPECT_LT(max_abs_diff(c.camera_T_desired_marker, desired_marker_pose(p, n, Vec3::Zero())), 1e-12);
}

TEST(ScanServo, MissingEstimateThrows) {
  ScanServo servo(one_point(Vec3(0, 0, 150), Vec3(0, 0, -1)), ControlConfig{}, ProbeGeometry{}, Vec3(40, 0, 0),
                  nullptr);
  FrameGraph g;
  observe(g, RigidTransform(), 0.0);
  EXPECT_THROW(servo.step(g, 0.0), StaleTransform);
}

TEST(ScanServo, DwellAdvancesAndEnds) {
  ScanTrajectory t;
  for (int i = 0; i < 3; ++i) t.points.push_back({Vec3(i, 0, 150), Vec3(0.2, 0, -1).normalized(), 0.4});
  Loop loop(t, ControlConfig{}, PlantParams{0.0, 0.0});
  std::vector<std::size_t> seen;
  bool ended = false;
  for (int i = 0; i < 40 && !ended; ++i) {
    loop.estimates.publish(estimate(RigidTransform(), 0.04 * i));
    try {
      seen.push_back(loop.tick(0.04 * i).active_index);
    } catch (const EndOfTrajectory&) {
      ended = true;
      EXPECT_EQ(i, 30);  // 3 x 0.4 s
    }
  }
  EXPECT_TRUE(ended);
  EXPECT_EQ(seen.front(), 0u);
  EXPECT_EQ(seen[10], 1u);
  EXPECT_EQ(seen.back(), 2u);
}

TEST(ScanServo, CommandCsvRowHasHeaderWidth) {
  const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  ServoCommand c;
  c.active_index = 2;
  c.stale = true;
  const auto row = command_csv_row(c, RigidTransform());
  EXPECT_EQ(count(row), count(command_csv_header()));
  EXPECT_EQ(row.substr(row.size() - 4), ",2,1");
}

TEST(LatestValue, ReaderSeesNewestWithoutQueueing) {
  LatestValue<int> cell;
  EXPECT_FALSE(cell.load().has_value());
  cell.publish(3);
  cell.publish(4);
  EXPECT_EQ(cell.load().value(), 4);

  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (int i = 5; i < 20000; ++i) cell.publish(i);
    done = true;
  });
  int last = 0, reads = 0;
  while (!done || reads < 10) {
    const int v = cell.load().value();
    EXPECT_GE(v, last);
    last = v;
    ++reads;
  }
  writer.join();
  EXPECT_EQ(cell.load().value(), 19999);
}
