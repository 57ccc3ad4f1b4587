#pragma once

// Organized point clouds: pinhole projection, pixel lookup and normals.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "tscan/errors.hpp"
#include "tscan/image.hpp"
#include "tscan/se3.hpp"

namespace tscan {

using Vec2 = Eigen::Vector2d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// 3x4 projection of the rectified left camera plus the image size.
class CameraIntrinsics {
 public:
  static constexpr int kDefaultWidth = 720;
  static constexpr int kDefaultHeight = 576;

  static CameraIntrinsics pinhole(double fx, double fy, double cx, double cy, int width, int height) {
    Mat34 p = Mat34::Zero();
    p(0, 0) = fx;
    p(1, 1) = fy;
    p(0, 2) = cx;
    p(1, 2) = cy;
    p(2, 2) = 1.0;
    return from_projection(p, width, height);
  }

  /// Default endoscope-like camera for a 720 x 576 image.
  static CameraIntrinsics default_camera() {
    return pinhole(700.0, 700.0, (kDefaultWidth - 1) / 2.0, (kDefaultHeight - 1) / 2.0, kDefaultWidth,
                   kDefaultHeight);
  }

  static CameraIntrinsics from_projection(const Mat34& p, int width, int height) {
    if (!(p(0, 0) > 0.0) || !(p(1, 1) > 0.0))
      throw std::invalid_argument("focal entries must be positive");
    if (p(1, 0) != 0.0 || p(2, 0) != 0.0 || p(2, 1) != 0.0)
      throw std::invalid_argument("projection block must be upper triangular");
    if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
    return CameraIntrinsics(p, width, height);
  }

  const Mat34& projection() const { return p_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double fx() const { return p_(0, 0); }
  double fy() const { return p_(1, 1); }
  double cx() const { return p_(0, 2); }
  double cy() const { return p_(1, 2); }

  /// Optical centre in camera coordinates.
  Vec3 center() const { return -(inv_ * p_.col(3)); }

  /// Unnormalized viewing ray through pixel (u, v), scaled so that z = 1.
  Vec3 ray(double u, double v) const {
    const Vec3 d = inv_ * Vec3(u, v, 1.0);
    return d / d.z();
  }

 private:
  CameraIntrinsics(const Mat34& p, int w, int h) : p_(p), inv_(p.leftCols<3>().inverse()), width_(w), height_(h) {}
  Mat34 p_;
  Mat3 inv_;
  int width_;
  int height_;
};

/// Pixel of point `p` after moving it by `motion`: s [u v 1]^T = K M p.
inline Vec2 project(const CameraIntrinsics& k, const RigidTransform& motion, const Vec3& p) {
  const Vec3 q = motion.apply(p);
  const Vec3 h = k.projection() * q.homogeneous();
  if (!(h.z() > 0.0)) throw BehindCamera("point projects with non-positive depth");
  return {h.x() / h.z(), h.y() / h.z()};
}

struct OrganizedPointCloud {
  OrganizedPointCloud() = default;
  OrganizedPointCloud(int width, int height)
      : points(width, height, Vec3::Zero()), valid(width, height, 0) {}

  int width() const { return points.width(); }
  int height() const { return points.height(); }
  bool is_valid(int u, int v) const { return valid.contains(u, v) && valid(u, v) != 0; }

  Grid<Vec3> points;
  Grid<std::uint8_t> valid;
};

struct NormalMap {
  NormalMap() = default;
  NormalMap(int width, int height) : normals(width, height, Vec3::Zero()), valid(width, height, 0) {}

  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
  bool is_valid(int u, int v) const { return valid.contains(u, v) && valid(u, v) != 0; }

  Grid<Vec3> normals;
  Grid<std::uint8_t> valid;
};

/// Stored point at an integer pixel, bilinear blend of the four neighbours
/// otherwise. Throws InvalidPixel when any contributing pixel has no depth.
inline Vec3 point_at_pixel(const OrganizedPointCloud& cloud, double u, double v) {
  if (!(u >= 0.0 && v >= 0.0 && u <= cloud.width() - 1.0 && v <= cloud.height() - 1.0))
    throw std::out_of_range("pixel outside the cloud");
  const int u0 = static_cast<int>(std::floor(u));
  const int v0 = static_cast<int>(std::floor(v));
  const double fu = u - u0, fv = v - v0;
  if (fu == 0.0 && fv == 0.0) {
    if (!cloud.is_valid(u0, v0)) throw InvalidPixel(u, v);
    return cloud.points(u0, v0);
  }
  const int u1 = fu > 0.0 ? u0 + 1 : u0;
  const int v1 = fv > 0.0 ? v0 + 1 : v0;
  if (!cloud.is_valid(u0, v0) || !cloud.is_valid(u1, v0) || !cloud.is_valid(u0, v1) || !cloud.is_valid(u1, v1))
    throw InvalidPixel(u, v);
  const Vec3 top = (1 - fu) * cloud.points(u0, v0) + fu * cloud.points(u1, v0);
  const Vec3 bottom = (1 - fu) * cloud.points(u0, v1) + fu * cloud.points(u1, v1);
  return (1 - fv) * top + fv * bottom;
}

/// Normals from the cross product of the first derivatives along the two
/// image axes. The grid is first box-smoothed over 3x3, then differentiated
/// with a central difference spanning 5 pixels. Normals face the camera
/// (negative dot product with the viewing ray); any pixel whose stencil
/// touches an invalid point is left invalid.
inline NormalMap estimate_normals(const OrganizedPointCloud& cloud, const Vec3& camera_center = Vec3::Zero()) {
  const int w = cloud.width(), h = cloud.height();
  OrganizedPointCloud smooth(w, h);
  for (int v = 1; v + 1 < h; ++v) {
    for (int u = 1; u + 1 < w; ++u) {
      Vec3 sum = Vec3::Zero();
      bool ok = true;
      for (int dv = -1; dv <= 1 && ok; ++dv)
        for (int du = -1; du <= 1; ++du) {
          if (!cloud.valid(u + du, v + dv)) {
            ok = false;
            break;
          }
          sum += cloud.points(u + du, v + dv);
        }
      if (ok) {
        smooth.points(u, v) = sum / 9.0;
        smooth.valid(u, v) = 1;
      }
    }
  }

  NormalMap out(w, h);
  constexpr int kHalfSpan = 2;
  for (int v = kHalfSpan; v + kHalfSpan < h; ++v) {
    for (int u = kHalfSpan; u + kHalfSpan < w; ++u) {
      if (!smooth.valid(u - kHalfSpan, v) || !smooth.valid(u + kHalfSpan, v) || !smooth.valid(u, v - kHalfSpan) ||
          !smooth.valid(u, v + kHalfSpan) || !cloud.valid(u, v))
        continue;
      const Vec3 du = smooth.points(u + kHalfSpan, v) - smooth.points(u - kHalfSpan, v);
      const Vec3 dv = smooth.points(u, v + kHalfSpan) - smooth.points(u, v - kHalfSpan);
      Vec3 n = du.cross(dv);
      const double len = n.norm();
      if (!(len > 0.0)) continue;
      n /= len;
      if (n.dot(cloud.points(u, v) - camera_center) > 0.0) n = -n;
      out.normals(u, v) = n;
      out.valid(u, v) = 1;
    }
  }
  return out;
}

}  // namespace tscan
