#pragma once

// Least-squares rigid fit of corresponded 3D point sets via SVD of the
// cross-covariance matrix.

#include <span>
#include <stdexcept>

#include "tscan/errors.hpp"
#include "tscan/se3.hpp"

namespace tscan {

/// Rigid transform T minimizing sum |T * initial_k - current_k|^2.
///
/// Throws std::invalid_argument for mismatched or too-short inputs and
/// DegenerateGeometry when the points are coincident or collinear.
inline RigidTransform kabsch_fit(std::span<const Vec3> initial, std::span<const Vec3> current) {
  if (initial.size() != current.size()) throw std::invalid_argument("point sets differ in length");
  if (initial.size() < 3) throw std::invalid_argument("need at least three correspondences");

  const double n = static_cast<double>(initial.size());
  Vec3 c_initial = Vec3::Zero(), c_current = Vec3::Zero();
  for (std::size_t k = 0; k < initial.size(); ++k) {
    c_initial += initial[k];
    c_current += current[k];
  }
  c_initial /= n;
  c_current /= n;

  Mat3 h = Mat3::Zero();
  double spread = 0.0;
  for (std::size_t k = 0; k < initial.size(); ++k) {
    const Vec3 a = initial[k] - c_initial;
    h += a * (current[k] - c_current).transpose();
    spread += a.squaredNorm();
  }

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  // Rank < 2 leaves the rotation about the remaining axis unconstrained.
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0) || spread <= 0.0)
    throw DegenerateGeometry("correspondences are collinear or coincident");

  const Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 r = v * u.transpose();
  if (r.determinant() < 0.0) {
    v.col(2) *= -1.0;
    r = v * u.transpose();
  }
  const Rotation3 rotation = Rotation3::nearest(r);
  return {rotation, c_current - rotation * c_initial};
}

inline double sum_squared_residual(const RigidTransform& t, std::span<const Vec3> initial,
                                   std::span<const Vec3> current) {
  double sum = 0.0;
  for (std::size_t k = 0; k < initial.size(); ++k) sum += (t.apply(initial[k]) - current[k]).squaredNorm();
  return sum;
}

}  // namespace tscan
