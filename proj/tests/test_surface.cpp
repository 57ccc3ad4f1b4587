#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>
#include <vector>

#include "analytic.hpp"
#include "tscan/cloud_io.hpp"
#include "tscan/sim/scene.hpp"
#include "tscan/surface.hpp"

using namespace tscan;
using namespace tscan::testing;

namespace {

// True when every normal within `border` pixels is valid.
bool interior(const NormalMap& m, int u, int v, int border) {
  for (int dv = -border; dv <= border; ++dv)
    for (int du = -border; du <= border; ++du)
      if (!m.is_valid(u + du, v + dv)) return false;
  return true;
}

}  // namespace

TEST(Camera, PrincipalAxisProjectsToPrincipalPoint) {
  const auto k = CameraIntrinsics::default_camera();
  const Vec2 px = project(k, RigidTransform(), Vec3(0, 0, 120));
  EXPECT_NEAR(px.x(), k.cx(), 1e-12);
  EXPECT_NEAR(px.y(), k.cy(), 1e-12);
}

TEST(Camera, ProjectionIsScaleInvariantAlongRay) {
  const auto k = CameraIntrinsics::default_camera();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-40, 40), z(60, 200);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(u(gen), u(gen), z(gen));
    EXPECT_LT((project(k, RigidTransform(), p) - project(k, RigidTransform(), 2.0 * p)).norm(), 1e-6);
  }
}

TEST(Camera, ProjectionAppliesMotion) {
  const auto k = CameraIntrinsics::default_camera();
  const Vec3 p(5, -3, 150);
  const RigidTransform m(Rotation3::about_y(3.0), Vec3(1, 2, -4));
  const Vec3 q = m.apply(p);
  const Vec2 px = project(k, m, p);
  EXPECT_NEAR(px.x(), k.fx() * q.x() / q.z() + k.cx(), 1e-9);
  EXPECT_NEAR(px.y(), k.fy() * q.y() / q.z() + k.cy(), 1e-9);
}

TEST(Camera, BehindCameraIsAnError) {
  const auto k = CameraIntrinsics::default_camera();
  EXPECT_THROW(project(k, RigidTransform(), Vec3(0, 0, -10)), BehindCamera);
  EXPECT_THROW(project(k, RigidTransform(), Vec3(1, 0, 0)), BehindCamera);
}

TEST(Camera, RejectsInvalidProjection) {
  Mat34 p = Mat34::Zero();
  p(0, 0) = -1;
  p(1, 1) = 700;
  p(2, 2) = 1;
  EXPECT_THROW(CameraIntrinsics::from_projection(p, 720, 576), std::invalid_argument);
  p(0, 0) = 700;
  p(2, 0) = 0.1;
  EXPECT_THROW(CameraIntrinsics::from_projection(p, 720, 576), std::invalid_argument);
  p(2, 0) = 0;
  EXPECT_THROW(CameraIntrinsics::from_projection(p, 0, 576), std::invalid_argument);
  EXPECT_NO_THROW(CameraIntrinsics::from_projection(p, 720, 576));
}

TEST(PointAtPixel, IntegerFractionalAndHoles) {
  const auto k = CameraIntrinsics::pinhole(500, 500, 31.5, 23.5, 64, 48);
  OrganizedPointCloud c = plane_cloud(k, Vec3(0.1, -0.2, 1).normalized(), 80.0);
  EXPECT_EQ(point_at_pixel(c, 10, 12), c.points(10, 12));
  const Vec3 mid = point_at_pixel(c, 10.5, 12);
  EXPECT_LT((mid - 0.5 * (c.points(10, 12) + c.points(11, 12))).norm(), 1e-12);

  c.valid(20, 20) = 0;
  EXPECT_THROW(point_at_pixel(c, 20, 20), InvalidPixel);
  EXPECT_THROW(point_at_pixel(c, 19.5, 20), InvalidPixel);
  EXPECT_NO_THROW(point_at_pixel(c, 18.5, 20));
  EXPECT_THROW(point_at_pixel(c, -1, 3), std::out_of_range);
  EXPECT_THROW(point_at_pixel(c, 3, 47.5), std::out_of_range);
}

TEST(Normals, FrontoParallelPlane) {
  const auto k = CameraIntrinsics::default_camera();
  const auto cloud = plane_cloud(k, Vec3(0, 0, 1), 50.0);
  const NormalMap n = estimate_normals(cloud);
  int valid = 0;
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u) {
      if (!n.is_valid(u, v)) continue;
      ++valid;
      EXPECT_LT((n.normals(u, v) - Vec3(0, 0, -1)).norm(), 1e-9);
    }
  // Everything but the 3-pixel image frame carries a normal.
  EXPECT_EQ(valid, (k.width() - 6) * (k.height() - 6));
}

TEST(Normals, TiltedPlane) {
  const auto k = CameraIntrinsics::default_camera();
  const Vec3 n = Vec3(0.3, -0.4, 1.0).normalized();
  const NormalMap m = estimate_normals(plane_cloud(k, n, 120.0));
  double worst = 0;
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u)
      if (interior(m, u, v, 2)) worst = std::max(worst, angle_deg(m.normals(u, v), -n));
  EXPECT_LT(worst, 0.5);
}

TEST(Normals, UnitLengthAndFacingCamera) {
  const auto k = CameraIntrinsics::default_camera();
  const auto cloud = sphere_cloud(k, Vec3(-8, 6, 140), 30.0);
  const NormalMap m = estimate_normals(cloud);
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u) {
      if (!m.is_valid(u, v)) continue;
      EXPECT_NEAR(m.normals(u, v).norm(), 1.0, 1e-6);
      EXPECT_LT(m.normals(u, v).dot(cloud.points(u, v)), 0.0);
    }
}

TEST(Normals, SphereMatchesRadialDirection) {
  const auto k = CameraIntrinsics::default_camera();
  const Vec3 c(10, -5, 150);
  const auto cloud = sphere_cloud(k, c, 30.0);
  const NormalMap m = estimate_normals(cloud);
  double worst = 0;
  int checked = 0;
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u)
      if (interior(m, u, v, 2)) {
        worst = std::max(worst, angle_deg(m.normals(u, v), (cloud.points(u, v) - c).normalized()));
        ++checked;
      }
  EXPECT_GT(checked, 50000);
  EXPECT_LT(worst, 2.0);
}

TEST(Normals, HeightfieldWithKnownGradient) {
  // Sinusoidal heightfield z = 150 + 2 sin(x / 8) cos(y / 10) viewed head-on.
  const auto k = CameraIntrinsics::default_camera();
  auto h = [](double x, double y) { return 150.0 + 2.0 * std::sin(x / 8.0) * std::cos(y / 10.0); };
  const auto cloud = cast_cloud(k, [&](const Vec3& ray) -> std::optional<double> {
    double s = 150.0;
    for (int i = 0; i < 50; ++i) {
      const double x = s * ray.x(), y = s * ray.y();
      const double f = s - h(x, y);
      const double dhx = 2.0 / 8.0 * std::cos(x / 8.0) * std::cos(y / 10.0);
      const double dhy = -2.0 / 10.0 * std::sin(x / 8.0) * std::sin(y / 10.0);
      s -= f / (1.0 - dhx * ray.x() - dhy * ray.y());
    }
    return s;
  });
  const NormalMap m = estimate_normals(cloud);
  double worst = 0;
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u) {
      if (!interior(m, u, v, 2)) continue;
      const Vec3 p = cloud.points(u, v);
      const double dhx = 2.0 / 8.0 * std::cos(p.x() / 8.0) * std::cos(p.y() / 10.0);
      const double dhy = -2.0 / 10.0 * std::sin(p.x() / 8.0) * std::sin(p.y() / 10.0);
      worst = std::max(worst, angle_deg(m.normals(u, v), Vec3(dhx, dhy, -1.0).normalized()));
    }
  EXPECT_LT(worst, 2.0);
}

TEST(Normals, NoisyPlaneMedianWithinTenDegrees) {
  const auto k = CameraIntrinsics::default_camera();
  const Vec3 n = Vec3(0.0, -0.34, 0.94).normalized();
  OrganizedPointCloud cloud = plane_cloud(k, n, 150.0);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u) {
      const Vec3 p = cloud.points(u, v);
      cloud.points(u, v) = p * (1.0 + noise(gen) / p.z());
    }
  const NormalMap m = estimate_normals(cloud);
  // With a 3x3 box and a 5-pixel span the per-pixel error at 150 mm is about
  // 10 degrees on average, so the bound is checked on the median, and the
  // averaged normal must show no bias.
  std::vector<double> errors;
  Vec3 mean_normal = Vec3::Zero();
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u)
      if (interior(m, u, v, 2)) {
        errors.push_back(angle_deg(m.normals(u, v), -n));
        mean_normal += m.normals(u, v);
      }
  ASSERT_FALSE(errors.empty());
  auto mid = errors.begin() + errors.size() / 2;
  std::nth_element(errors.begin(), mid, errors.end());
  EXPECT_LT(*mid, 10.0);
  EXPECT_LT(angle_deg(mean_normal.normalized(), -n), 0.5);
}

TEST(Normals, HolesInvalidateTheStencil) {
  const auto k = CameraIntrinsics::pinhole(500, 500, 31.5, 23.5, 64, 48);
  OrganizedPointCloud cloud = plane_cloud(k, Vec3(0, 0, 1), 60.0);
  cloud.valid(30, 20) = 0;
  const NormalMap m = estimate_normals(cloud);
  EXPECT_FALSE(m.is_valid(30, 20));
  EXPECT_FALSE(m.is_valid(33, 20));
  EXPECT_FALSE(m.is_valid(30, 17));
  EXPECT_TRUE(m.is_valid(34, 20));
  EXPECT_TRUE(m.is_valid(30, 24));
}

TEST(Cloud, SimulatedCloudRoundTripsThroughProjection) {
  const PhantomSurface surface;
  SceneConfig cfg;
  for (double sigma : {0.0, 0.3}) {
    cfg.noise_sigma_mm = sigma;
    const SceneGenerator gen(surface, MotionProfile::respiratory(1, Axis::X), {}, cfg);
    const SceneFrame f = gen.generate(0.4);
    double worst = 0;
    int valid = 0;
    for (int v = 0; v < f.cloud.height(); ++v)
      for (int u = 0; u < f.cloud.width(); ++u) {
        if (!f.cloud.is_valid(u, v)) continue;
        ++valid;
        worst = std::max(worst, (project(cfg.camera, RigidTransform(), point_at_pixel(f.cloud, u, v)) - Vec2(u, v)).norm());
      }
    EXPECT_GT(valid, 100000);
    EXPECT_LT(worst, 0.5);
  }
}

TEST(CloudIo, RoundTripAndRejectsGarbage) {
  const auto k = CameraIntrinsics::pinhole(300, 300, 15.5, 11.5, 32, 24);
  OrganizedPointCloud c = plane_cloud(k, Vec3(0.2, 0.1, 1).normalized(), 70.0);
  c.valid(3, 4) = 0;
  c.points(3, 4) = Vec3::Zero();
  std::stringstream ss;
  write_cloud(ss, c);
  EXPECT_EQ(ss.str().size(), 16u + 32u * 24u * 13u);
  const OrganizedPointCloud back = read_cloud(ss);
  ASSERT_EQ(back.width(), 32);
  ASSERT_EQ(back.height(), 24);
  EXPECT_EQ(back.valid, c.valid);
  for (int v = 0; v < 24; ++v)
    for (int u = 0; u < 32; ++u)
      EXPECT_LT((back.points(u, v) - c.points(u, v)).norm(), 1e-4 * c.points(u, v).norm() + 1e-12);

  std::stringstream bad("NOPE and some bytes");
  EXPECT_THROW(read_cloud(bad), IoError);
  EXPECT_THROW(read_cloud(std::string("/nonexistent/dir/cloud.tscg")), IoError);
}
