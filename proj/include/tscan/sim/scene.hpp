#pragma once

// Frame synthesis: ray casts the posed phantom heightfield through the
// pinhole camera, draws scripted occluders, and emits the organized cloud
// with seeded depth noise alongside ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tscan/image.hpp"
#include "tscan/sim/motion.hpp"
#include "tscan/sim/phantom.hpp"
#include "tscan/surface.hpp"

namespace tscan {

enum class Label : std::uint8_t { Background = 0, Tissue = 1, Occluder = 2 };

/// A gray convex polygon in pixel coordinates, active on [t_on, t_off) and
/// translating with constant image velocity from its position at t_on.
struct OccluderEvent {
  std::vector<Vec2> polygon;
  double t_on_s = 0.0;
  double t_off_s = 0.0;
  Vec2 velocity_px_s = Vec2::Zero();
  double depth_mm = 110.0;
  Rgb color{170, 170, 170};

  bool active(double t) const { return t >= t_on_s && t < t_off_s; }
  std::vector<Vec2> polygon_at(double t) const {
    std::vector<Vec2> out = polygon;
    for (auto& p : out) p += velocity_px_s * (t - t_on_s);
    return out;
  }
};

using OccluderScript = std::vector<OccluderEvent>;

/// Axis-aligned rectangle as an occluder polygon.
inline std::vector<Vec2> rectangle_polygon(double u0, double v0, double u1, double v1) {
  return {Vec2(u0, v0), Vec2(u1, v0), Vec2(u1, v1), Vec2(u0, v1)};
}

inline bool inside_convex(const std::vector<Vec2>& poly, double u, double v) {
  int sign = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double cross = (b.x() - a.x()) * (v - a.y()) - (b.y() - a.y()) * (u - a.x());
    if (cross == 0.0) continue;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0)
      sign = s;
    else if (s != sign)
      return false;
  }
  return true;
}

struct SceneFrame {
  double timestamp_s = 0.0;
  RgbImage image;
  OrganizedPointCloud cloud;
  Grid<Label> labels;
  // camera_T_phantom at this instant.
  RigidTransform tissue_pose;
  // Rigid displacement applied to the phantom at this instant.
  RigidTransform motion;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Standard normal draw fully determined by the key.
inline double hashed_normal(std::uint64_t key) {
  const std::uint64_t a = splitmix64(key);
  const std::uint64_t b = splitmix64(a ^ 0xd1b54a32d192ed03ull);
  const double u1 = ((a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace detail

struct SceneConfig {
  CameraIntrinsics camera = CameraIntrinsics::default_camera();
  // Phantom placement at zero motion: tilted towards the camera.
  RigidTransform phantom_pose{Rotation3::about_x(160.0), Vec3(0.0, 0.0, 160.0)};
  double noise_sigma_mm = 0.3;
  double image_noise_sigma = 0.0;
  Rgb background{25, 30, 40};
  std::uint64_t seed = 1;
};

class SceneGenerator {
 public:
  SceneGenerator(const PhantomSurface& surface, MotionProfile profile, OccluderScript occluders, SceneConfig config)
      : surface_(&surface), profile_(std::move(profile)), occluders_(std::move(occluders)), config_(config) {
    profile_.set_pivot(config_.phantom_pose.translation());
  }

  const SceneConfig& config() const { return config_; }
  const MotionProfile& profile() const { return profile_; }
  const PhantomSurface& surface() const { return *surface_; }
  const OccluderScript& occluders() const { return occluders_; }

  RigidTransform tissue_pose(double t) const { return motion_offset(profile_, t) * config_.phantom_pose; }

  /// Deterministic in (t, seed).
  SceneFrame generate(double t) const {
    const CameraIntrinsics& k = config_.camera;
    const int w = k.width(), h = k.height();
    SceneFrame f;
    f.timestamp_s = t;
    f.motion = motion_offset(profile_, t);
    f.tissue_pose = f.motion * config_.phantom_pose;
    f.image = RgbImage(w, h, config_.background);
    f.cloud = OrganizedPointCloud(w, h);
    f.labels = Grid<Label>(w, h, Label::Background);

    const RigidTransform local_T_cam = f.tissue_pose.inverse();
    const Mat3& rl = local_T_cam.rotation().matrix();
    const Vec3 origin = local_T_cam.apply(k.center());
    const Vec3 cam_origin = k.center();
    const std::uint64_t frame_key =
        detail::splitmix64(config_.seed ^ detail::splitmix64(static_cast<std::uint64_t>(std::llround(t * 1e6))));
    const double h_mid = surface_->height(0.0, 0.0);
    const auto [bu0, bv0, bu1, bv1] = footprint(f.tissue_pose);

    std::vector<std::vector<Vec2>> polys;
    std::vector<const OccluderEvent*> active;
    for (const auto& o : occluders_)
      if (o.active(t)) {
        polys.push_back(o.polygon_at(t));
        active.push_back(&o);
      }

    for (int v = 0; v < h; ++v) {
      double s_prev = -1.0;
      for (int u = 0; u < w; ++u) {
        const std::uint64_t key = frame_key ^ (static_cast<std::uint64_t>(v) * w + u) * 0x9e3779b97f4a7c15ull;
        const Vec3 ray = k.ray(u, v);

        const OccluderEvent* occ = nullptr;
        for (std::size_t i = 0; i < polys.size(); ++i)
          if (inside_convex(polys[i], u, v)) {
            occ = active[i];
            break;
          }
        if (occ) {
          f.image(u, v) = occ->color;
          f.labels(u, v) = Label::Occluder;
          const double depth = occ->depth_mm + config_.noise_sigma_mm * detail::hashed_normal(key);
          f.cloud.points(u, v) = cam_origin + depth * ray;
          f.cloud.valid(u, v) = 1;
          continue;
        }

        if (u < bu0 || u > bu1 || v < bv0 || v > bv1) continue;
        const Vec3 d = rl * ray;
        double s;
        if (!intersect(origin, d, h_mid, s_prev, s)) {
          s_prev = -1.0;
          continue;
        }
        const Vec3 q = origin + s * d;
        if (!surface_->contains(q.x(), q.y())) {
          s_prev = -1.0;
          continue;
        }
        s_prev = s;
        const auto c = surface_->color(q.x(), q.y());
        Rgb px;
        for (int ch = 0; ch < 3; ++ch) {
          double val = c[ch];
          if (config_.image_noise_sigma > 0.0)
            val += config_.image_noise_sigma * detail::hashed_normal(key ^ (0x51ull + ch));
          px[ch] = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0) + 0.5);
        }
        f.image(u, v) = px;
        f.labels(u, v) = Label::Tissue;
        const double depth = s + config_.noise_sigma_mm * detail::hashed_normal(key);
        f.cloud.points(u, v) = cam_origin + depth * ray;
        f.cloud.valid(u, v) = 1;
      }
    }
    return f;
  }

  /// Pixel of a phantom-local point at time t.
  Vec2 project_local(const Vec3& local, double t) const {
    return project(config_.camera, tissue_pose(t), local);
  }

  /// Pixel location of a blob centre (on the surface) at time t.
  Vec2 blob_pixel(const Blob& b, double t) const {
    return project_local(Vec3(b.x_mm, b.y_mm, surface_->height(b.x_mm, b.y_mm)), t);
  }

 private:
  // Pixel bounding box of the posed patch, from a dense sampling of the
  // surface, padded by a few pixels. Pixels outside it see background.
  std::array<int, 4> footprint(const RigidTransform& pose) const {
    const auto& p = surface_->params();
    const CameraIntrinsics& k = config_.camera;
    double umin = 1e300, vmin = 1e300, umax = -1e300, vmax = -1e300;
    constexpr int kSteps = 48;
    for (int j = 0; j <= kSteps; ++j) {
      for (int i = 0; i <= kSteps; ++i) {
        const double x = -p.half_width_mm + 2.0 * p.half_width_mm * i / kSteps;
        const double y = -p.half_height_mm + 2.0 * p.half_height_mm * j / kSteps;
        const Vec3 q = pose.apply(Vec3(x, y, surface_->height(x, y)));
        if (!(q.z() > 0.0)) return {0, 0, k.width() - 1, k.height() - 1};
        const Vec3 h = k.projection() * q.homogeneous();
        const double u = h.x() / h.z(), v = h.y() / h.z();
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
    constexpr double kPad = 4.0;
    auto clampi = [](double x, int hi) { return static_cast<int>(std::clamp(x, -1.0, hi + 1.0)); };
    return {clampi(std::floor(umin - kPad), k.width()), clampi(std::floor(vmin - kPad), k.height()),
            clampi(std::ceil(umax + kPad), k.width()), clampi(std::ceil(vmax + kPad), k.height())};
  }

  // Newton solve of o.z + s d.z = h(o.x + s d.x, o.y + s d.y), with s the
  // ray parameter (= depth, since rays have unit z in the camera frame).
  bool intersect(const Vec3& o, const Vec3& d, double h_mid, double warm, double& s) const {
    if (warm > 0.0)
      s = warm;
    else {
      if (std::abs(d.z()) < 1e-12) return false;
      s = (h_mid - o.z()) / d.z();
    }
    for (int it = 0; it < 20; ++it) {
      const double x = o.x() + s * d.x(), y = o.y() + s * d.y();
      const auto hg = surface_->height_and_gradient(x, y);
      const double f = o.z() + s * d.z() - hg[0];
      const double df = d.z() - (hg[1] * d.x() + hg[2] * d.y());
      if (std::abs(df) < 1e-12) return false;
      const double step = f / df;
      s -= step;
      if (std::abs(step) < 1e-10) return s > 0.0;
    }
    return false;
  }

  const PhantomSurface* surface_;
  MotionProfile profile_;
  OccluderScript occluders_;
  SceneConfig config_;
};

}  // namespace tscan
