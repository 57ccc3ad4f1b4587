#pragma once

#include <random>

#include "tscan/se3.hpp"

namespace tscan::testing {

/// Uniform random rotation from a normalized Gaussian quaternion, converted
/// with the textbook formula (independent of the library's own conversions).
inline Mat3 random_rotation_matrix(std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  double w = n(gen), x = n(gen), y = n(gen), z = n(gen);
  const double len = std::sqrt(w * w + x * x + y * y + z * z);
  w /= len, x /= len, y /= len, z /= len;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

inline Vec3 random_vec(std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(gen), u(gen), u(gen)};
}

inline RigidTransform random_transform(std::mt19937_64& gen, double translation_scale = 100.0) {
  return {Rotation3::from_matrix(random_rotation_matrix(gen)), random_vec(gen, translation_scale)};
}

/// Homogeneous 4x4 built directly from rotation and translation entries.
inline Eigen::Matrix4d homogeneous(const Mat3& r, const Vec3& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = r(i, j);
    m(i, 3) = t[i];
  }
  m(3, 3) = 1.0;
  return m;
}

inline double max_abs_diff(const RigidTransform& a, const RigidTransform& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace tscan::testing
