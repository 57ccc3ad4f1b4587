#pragma once

// Rigid-body algebra in millimetres and degrees.
//
// A RigidTransform `a_T_b` maps coordinates expressed in frame b into frame a:
// p_a = R * p_b + t. Composition follows the homogeneous-matrix product, so
// `a_T_b * b_T_c == a_T_c`.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace tscan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Orthonormal 3x3 matrix with det = +1.
class Rotation3 {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation3() : m_(Mat3::Identity()) {}

  /// Validates orthonormality and handedness; throws std::invalid_argument.
  static Rotation3 from_matrix(const Mat3& m) {
    if (!is_rotation(m)) throw std::invalid_argument("matrix is not a proper rotation");
    return Rotation3(m);
  }

  /// Nearest proper rotation in the Frobenius sense (SVD projection).
  static Rotation3 nearest(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 r = u * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
      u.col(2) *= -1.0;
      r = u * svd.matrixV().transpose();
    }
    return Rotation3(r);
  }

  static Rotation3 axis_angle(const Vec3& axis, double angle_deg) {
    return Rotation3(Eigen::AngleAxisd(deg2rad(angle_deg), axis.normalized()).toRotationMatrix());
  }
  static Rotation3 about_x(double deg) { return axis_angle(Vec3::UnitX(), deg); }
  static Rotation3 about_y(double deg) { return axis_angle(Vec3::UnitY(), deg); }
  static Rotation3 about_z(double deg) { return axis_angle(Vec3::UnitZ(), deg); }

  static Rotation3 from_quaternion(const Eigen::Quaterniond& q) {
    return Rotation3(q.normalized().toRotationMatrix());
  }

  static bool is_rotation(const Mat3& m, double tol = kTolerance) {
    const Mat3 e = m * m.transpose() - Mat3::Identity();
    return e.cwiseAbs().maxCoeff() <= tol && std::abs(m.determinant() - 1.0) <= tol;
  }

  const Mat3& matrix() const { return m_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_); }
  Rotation3 transposed() const { return Rotation3(m_.transpose()); }
  Rotation3 operator*(const Rotation3& o) const { return Rotation3(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Geodesic angle of this rotation, in degrees.
  double angle_deg() const {
    const Vec3 w(m_(2, 1) - m_(1, 2), m_(0, 2) - m_(2, 0), m_(1, 0) - m_(0, 1));
    return rad2deg(std::atan2(0.5 * w.norm(), 0.5 * (m_.trace() - 1.0)));
  }

 private:
  explicit Rotation3(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

struct PoseError {
  double translation_mm = 0.0;
  double rotation_deg = 0.0;
};

class RigidTransform {
 public:
  RigidTransform() : t_(Vec3::Zero()) {}
  RigidTransform(const Rotation3& r, const Vec3& t) : r_(r), t_(t) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(const Vec3& t) { return {Rotation3(), t}; }
  static RigidTransform translation(double x, double y, double z) { return translation(Vec3(x, y, z)); }
  static RigidTransform rotation(const Rotation3& r) { return {r, Vec3::Zero()}; }

  /// From a homogeneous 4x4 matrix; the rotation block must be proper.
  static RigidTransform from_matrix(const Mat4& m) {
    return {Rotation3::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
  }

  /// Row-major 9 rotation entries followed by the 3 translation entries.
  static RigidTransform from_row_major(std::span<const double, 12> v) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = v[3 * i + j];
    return {Rotation3::nearest(r), Vec3(v[9], v[10], v[11])};
  }

  std::array<double, 12> to_row_major() const {
    std::array<double, 12> out{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[3 * i + j] = r_.matrix()(i, j);
    out[9] = t_.x();
    out[10] = t_.y();
    out[11] = t_.z();
    return out;
  }

  const Rotation3& rotation() const { return r_; }
  const Vec3& translation() const { return t_; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = r_.matrix();
    m.topRightCorner<3, 1>() = t_;
    return m;
  }

  RigidTransform operator*(const RigidTransform& o) const {
    return {r_ * o.r_, r_.matrix() * o.t_ + t_};
  }

  RigidTransform inverse() const {
    const Rotation3 rt = r_.transposed();
    return {rt, -(rt.matrix() * t_)};
  }

  Vec3 apply(const Vec3& p) const { return r_.matrix() * p + t_; }

  /// Re-project the rotation block onto SO(3); used by long-running loops.
  RigidTransform orthonormalized() const { return {Rotation3::nearest(r_.matrix()), t_}; }

 private:
  Rotation3 r_;
  Vec3 t_;
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform inverse(const RigidTransform& t) { return t.inverse(); }
inline Vec3 apply(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

/// Geodesic angle of a^T b, i.e. arccos((trace - 1) / 2), evaluated in the
/// atan2 form that keeps full precision near 0 and 180 degrees.
inline double rotation_distance_deg(const Rotation3& a, const Rotation3& b) {
  const Mat3 r = a.matrix().transpose() * b.matrix();
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return rad2deg(std::atan2(0.5 * w.norm(), 0.5 * (r.trace() - 1.0)));
}

/// Translation norm difference and geodesic angle of the relative rotation.
inline PoseError pose_error(const RigidTransform& a, const RigidTransform& b) {
  return {(a.translation() - b.translation()).norm(), rotation_distance_deg(a.rotation(), b.rotation())};
}

/// Composition that re-orthonormalizes every `period` products.
class ComposeAccumulator {
 public:
  explicit ComposeAccumulator(int period = 100) : period_(period) {}

  void push(const RigidTransform& t) {
    value_ = value_ * t;
    if (++count_ % period_ == 0) value_ = value_.orthonormalized();
  }
  const RigidTransform& value() const { return value_; }
  int count() const { return count_; }

 private:
  int period_;
  int count_ = 0;
  RigidTransform value_;
};

/// Geodesic interpolation: fraction 0 returns `from`, 1 returns `to`.
inline RigidTransform interpolate(const RigidTransform& from, const RigidTransform& to, double fraction) {
  if (fraction >= 1.0) return to;
  if (fraction <= 0.0) return from;
  const Eigen::Quaterniond q = from.rotation().quaternion().slerp(fraction, to.rotation().quaternion());
  const Vec3 t = from.translation() + fraction * (to.translation() - from.translation());
  return {Rotation3::from_quaternion(q), t};
}

}  // namespace tscan
