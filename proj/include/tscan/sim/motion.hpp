#pragma once

// Rigid phantom motion: per-axis respiratory sinusoids and a seeded,
// low-pass filtered random wander.
//
// Amplitudes are peak-to-peak: an axis with amplitude A and period P moves
// as (A / 2) sin(2 pi t / P + phase).

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tscan/se3.hpp"

namespace tscan {

enum class Axis { X = 0, Y = 1, Z = 2 };

struct SinusoidAxis {
  double period_s = 3.0;
  double amplitude_mm = 3.0;  // peak-to-peak
  double phase_rad = 0.0;
};

struct FreeFormWalk {
  double sigma_mm = 1.0;  // stationary std of the filtered walk, per axis
  double correlation_time_s = 2.0;
  double smoothing_window_s = 0.5;
  double rotation_sigma_deg = 0.0;  // optional rotational wander, per axis
  double duration_s = 30.0;
  std::uint64_t seed = 1;
};

/// Table of respiratory profiles: period (s) and peak-to-peak amplitude (mm).
struct RespiratoryProfile {
  double period_s;
  double amplitude_mm;
};

inline RespiratoryProfile respiratory_profile(int index) {
  switch (index) {
    case 1: return {3.0, 3.0};
    case 2: return {5.0, 3.0};
    case 3: return {5.0, 5.0};
    default: throw std::invalid_argument("motion profile must be 1, 2 or 3");
  }
}

class MotionProfile {
 public:
  static constexpr double kWalkStep = 0.01;

  MotionProfile() = default;

  /// Sinusoid of respiratory profile `index` along one axis.
  static MotionProfile respiratory(int index, Axis axis) {
    const auto p = respiratory_profile(index);
    MotionProfile m;
    m.axes_[static_cast<int>(axis)] = SinusoidAxis{p.period_s, p.amplitude_mm, 0.0};
    return m;
  }

  /// Profile `index` on all three axes with seeded weights and phases, plus a
  /// filtered random wander of a quarter of the amplitude.
  static MotionProfile free_form(int index, std::uint64_t seed, double duration_s) {
    const auto p = respiratory_profile(index);
    std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ull);
    MotionProfile m;
    for (auto& a : m.axes_) {
      const double weight = 0.5 + 0.5 * ((gen() >> 11) * 0x1.0p-53);
      const double phase = 2.0 * kPi * ((gen() >> 11) * 0x1.0p-53);
      a = SinusoidAxis{p.period_s, p.amplitude_mm * weight, phase};
    }
    FreeFormWalk w;
    w.sigma_mm = p.amplitude_mm / 4.0;
    w.duration_s = duration_s;
    w.seed = seed;
    m.set_walk(w);
    return m;
  }

  static MotionProfile walk_only(const FreeFormWalk& w) {
    MotionProfile m;
    m.set_walk(w);
    return m;
  }

  void set_axis(Axis axis, std::optional<SinusoidAxis> s) { axes_[static_cast<int>(axis)] = s; }
  const std::optional<SinusoidAxis>& axis(Axis a) const { return axes_[static_cast<int>(a)]; }
  const std::optional<FreeFormWalk>& walk() const { return walk_; }

  /// Rotations of the wander act about this point (camera frame).
  void set_pivot(const Vec3& p) { pivot_ = p; }
  const Vec3& pivot() const { return pivot_; }

  void set_walk(const FreeFormWalk& w) {
    walk_ = w;
    samples_ = std::make_shared<const WalkSamples>(generate(w));
  }

  Vec3 translation_at(double t) const {
    Vec3 d = Vec3::Zero();
    for (int i = 0; i < 3; ++i)
      if (axes_[i]) d[i] = 0.5 * axes_[i]->amplitude_mm * std::sin(2.0 * kPi * t / axes_[i]->period_s + axes_[i]->phase_rad);
    if (samples_) d += samples_->at(t, 0);
    return d;
  }

  Vec3 rotation_at_deg(double t) const { return samples_ ? samples_->at(t, 1) : Vec3::Zero(); }

 private:
  struct WalkSamples {
    std::vector<Vec3> translation;
    std::vector<Vec3> rotation_deg;

    Vec3 at(double t, int which) const {
      const auto& s = which == 0 ? translation : rotation_deg;
      if (s.empty() || t <= 0.0) return s.empty() ? Vec3::Zero() : s.front();
      const double x = t / kWalkStep;
      const std::size_t i = static_cast<std::size_t>(x);
      if (i + 1 >= s.size()) return s.back();
      const double f = x - i;
      return (1.0 - f) * s[i] + f * s[i + 1];
    }
  };

  // Ornstein-Uhlenbeck per axis started at zero, then a causal moving
  // average. The driving noise is scaled so the filtered output has the
  // requested stationary standard deviation.
  static WalkSamples generate(const FreeFormWalk& w) {
    const std::size_t n = static_cast<std::size_t>(std::ceil(w.duration_s / kWalkStep)) + 2;
    const int m = std::max(1, static_cast<int>(std::lround(w.smoothing_window_s / kWalkStep)));
    const double a = std::exp(-kWalkStep / w.correlation_time_s);
    double acc = m;
    for (int d = 1; d < m; ++d) acc += 2.0 * (m - d) * std::pow(a, d);
    const double gain = std::sqrt(static_cast<double>(m) * m / acc);

    std::mt19937_64 gen(w.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto filtered = [&](double sigma) {
      std::vector<Vec3> raw(n, Vec3::Zero()), out(n, Vec3::Zero());
      Vec3 x = Vec3::Zero();
      for (std::size_t k = 1; k < n; ++k) {
        for (int c = 0; c < 3; ++c) x[c] = a * x[c] + std::sqrt(1.0 - a * a) * sigma * gain * normal(gen);
        raw[k] = x;
      }
      Vec3 sum = Vec3::Zero();
      for (std::size_t k = 0; k < n; ++k) {
        sum += raw[k];
        if (k >= static_cast<std::size_t>(m)) sum -= raw[k - m];
        out[k] = sum / m;
      }
      return out;
    };
    WalkSamples s;
    s.translation = filtered(w.sigma_mm);
    s.rotation_deg = w.rotation_sigma_deg > 0.0 ? filtered(w.rotation_sigma_deg) : std::vector<Vec3>(n, Vec3::Zero());
    return s;
  }

  std::array<std::optional<SinusoidAxis>, 3> axes_{};
  std::optional<FreeFormWalk> walk_;
  std::shared_ptr<const WalkSamples> samples_;
  Vec3 pivot_ = Vec3::Zero();
};

/// Rigid displacement of the whole phantom at time t (camera frame).
inline RigidTransform motion_offset(const MotionProfile& profile, double t) {
  const Vec3 d = profile.translation_at(t);
  const Vec3 r = profile.rotation_at_deg(t);
  if (r.isZero(0.0)) return RigidTransform::translation(d);
  const double angle = r.norm();
  const RigidTransform rot = RigidTransform::rotation(Rotation3::axis_angle(r / angle, angle));
  return RigidTransform::translation(profile.pivot() + d) * rot * RigidTransform::translation(-profile.pivot());
}

}  // namespace tscan
