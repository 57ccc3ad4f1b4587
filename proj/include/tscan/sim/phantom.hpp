#pragma once

// Synthetic tissue phantom: a polynomial heightfield over a 120 x 90 mm
// patch, a colour texture with salient dark blobs, and an internal speckle
// volume for ultrasound slicing. Coordinates are phantom-local millimetres
// with z pointing out of the tissue.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "tscan/image.hpp"
#include "tscan/se3.hpp"

namespace tscan {

struct Blob {
  double x_mm;
  double y_mm;
  double sigma_mm;
  double strength;  // fractional darkening at the centre
};

struct PhantomParams {
  double half_width_mm = 60.0;
  double half_height_mm = 45.0;
  // h = c0 + c1 X^2 + c2 Y^2 + c3 XY + c4 X^3 + c5 X^2 Y + c6 Y^3, X = x / hw, Y = y / hh.
  std::array<double, 7> height_coeffs{8.0, -3.0, -4.0, 1.2, 0.8, -0.6, 0.5};

  std::array<double, 3> base_rgb{200.0, 105.0, 80.0};
  double modulation = 0.08;
  bool textured = true;
  int blob_count = 50;
  double blob_sigma_mm = 1.0;
  double blob_edge_margin_mm = 8.0;
  double blob_strength_lo = 0.45;
  double blob_strength_hi = 0.65;
  double texel_mm = 0.1;

  double volume_spacing_mm = 0.5;
  double volume_depth_mm = 32.0;
  double speckle_sigma_mm = 1.0;

  std::uint64_t seed = 7;
};

class PhantomSurface {
 public:
  explicit PhantomSurface(const PhantomParams& p = {}) : p_(p) {
    build_blobs();
    build_texture();
    build_volume();
  }

  const PhantomParams& params() const { return p_; }
  const std::vector<Blob>& blobs() const { return blobs_; }

  bool contains(double x, double y) const {
    return std::abs(x) <= p_.half_width_mm && std::abs(y) <= p_.half_height_mm;
  }

  double height(double x, double y) const {
    const auto& c = p_.height_coeffs;
    const double X = x / p_.half_width_mm, Y = y / p_.half_height_mm;
    return c[0] + c[1] * X * X + c[2] * Y * Y + c[3] * X * Y + c[4] * X * X * X + c[5] * X * X * Y + c[6] * Y * Y * Y;
  }

  /// (dh/dx, dh/dy).
  std::array<double, 2> gradient(double x, double y) const {
    const auto& c = p_.height_coeffs;
    const double X = x / p_.half_width_mm, Y = y / p_.half_height_mm;
    const double hX = 2 * c[1] * X + c[3] * Y + 3 * c[4] * X * X + 2 * c[5] * X * Y;
    const double hY = 2 * c[2] * Y + c[3] * X + c[5] * X * X + 3 * c[6] * Y * Y;
    return {hX / p_.half_width_mm, hY / p_.half_height_mm};
  }

  /// Height and gradient in one evaluation: {h, dh/dx, dh/dy}.
  std::array<double, 3> height_and_gradient(double x, double y) const {
    const auto& c = p_.height_coeffs;
    const double X = x / p_.half_width_mm, Y = y / p_.half_height_mm;
    const double XX = X * X, YY = Y * Y, XY = X * Y;
    const double h = c[0] + c[1] * XX + c[2] * YY + c[3] * XY + c[4] * XX * X + c[5] * XX * Y + c[6] * YY * Y;
    const double hX = 2 * c[1] * X + c[3] * Y + 3 * c[4] * XX + 2 * c[5] * XY;
    const double hY = 2 * c[2] * Y + c[3] * X + c[5] * XX + 3 * c[6] * YY;
    return {h, hX / p_.half_width_mm, hY / p_.half_height_mm};
  }

  Vec3 normal(double x, double y) const {
    const auto g = gradient(x, y);
    return Vec3(-g[0], -g[1], 1.0).normalized();
  }

  std::array<double, 3> color(double x, double y) const {
    const double gx = std::clamp((x + p_.half_width_mm) / p_.texel_mm, 0.0, tex_w_ - 1.0);
    const double gy = std::clamp((y + p_.half_height_mm) / p_.texel_mm, 0.0, tex_h_ - 1.0);
    const int x0 = std::min(static_cast<int>(gx), tex_w_ - 2), y0 = std::min(static_cast<int>(gy), tex_h_ - 2);
    const double fx = gx - x0, fy = gy - y0;
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
    const std::size_t i00 = 3 * (static_cast<std::size_t>(y0) * tex_w_ + x0);
    const std::size_t i01 = i00 + 3 * static_cast<std::size_t>(tex_w_);
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c)
      out[c] = w00 * texture_[i00 + c] + w10 * texture_[i00 + 3 + c] + w01 * texture_[i01 + c] + w11 * texture_[i01 + 3 + c];
    return out;
  }

  /// Speckle value at a local point; zero outside the sampled volume.
  float volume(double x, double y, double z) const {
    const double gx = (x - vol_origin_[0]) / p_.volume_spacing_mm;
    const double gy = (y - vol_origin_[1]) / p_.volume_spacing_mm;
    const double gz = (z - vol_origin_[2]) / p_.volume_spacing_mm;
    if (gx < 0 || gy < 0 || gz < 0 || gx > vol_dims_[0] - 1 || gy > vol_dims_[1] - 1 || gz > vol_dims_[2] - 1)
      return 0.0f;
    const int x0 = std::min(static_cast<int>(gx), vol_dims_[0] - 2);
    const int y0 = std::min(static_cast<int>(gy), vol_dims_[1] - 2);
    const int z0 = std::min(static_cast<int>(gz), vol_dims_[2] - 2);
    const double fx = gx - x0, fy = gy - y0, fz = gz - z0;
    auto at = [&](int i, int j, int k) {
      return static_cast<double>(volume_[(static_cast<std::size_t>(k) * vol_dims_[1] + j) * vol_dims_[0] + i]);
    };
    double v = 0.0;
    for (int dz = 0; dz < 2; ++dz)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          v += (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz) * at(x0 + dx, y0 + dy, z0 + dz);
    return static_cast<float>(v);
  }

 private:
  void build_blobs() {
    blobs_.clear();
    if (!p_.textured || p_.blob_count <= 0) return;
    std::mt19937_64 gen(p_.seed);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * ((gen() >> 11) * 0x1.0p-53); };
    // Jittered grid with roughly 2:1 aspect, filled row-major.
    const int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(2.0 * p_.blob_count))));
    const int rows = (p_.blob_count + cols - 1) / cols;
    const double x0 = -p_.half_width_mm + p_.blob_edge_margin_mm, x1 = p_.half_width_mm - p_.blob_edge_margin_mm;
    const double y0 = -p_.half_height_mm + p_.blob_edge_margin_mm, y1 = p_.half_height_mm - p_.blob_edge_margin_mm;
    const double dx = (x1 - x0) / cols, dy = (y1 - y0) / rows;
    for (int i = 0; i < p_.blob_count; ++i) {
      const int r = i / cols, c = i % cols;
      Blob b;
      b.x_mm = x0 + (c + 0.5) * dx + uniform(-0.2, 0.2) * dx;
      b.y_mm = y0 + (r + 0.5) * dy + uniform(-0.2, 0.2) * dy;
      b.sigma_mm = p_.blob_sigma_mm;
      b.strength = uniform(p_.blob_strength_lo, p_.blob_strength_hi);
      blobs_.push_back(b);
    }
  }

  void build_texture() {
    tex_w_ = static_cast<int>(std::lround(2 * p_.half_width_mm / p_.texel_mm)) + 1;
    tex_h_ = static_cast<int>(std::lround(2 * p_.half_height_mm / p_.texel_mm)) + 1;
    std::vector<double> shade(static_cast<std::size_t>(tex_w_) * tex_h_, 1.0);
    for (int j = 0; j < tex_h_; ++j) {
      const double y = -p_.half_height_mm + j * p_.texel_mm;
      for (int i = 0; i < tex_w_; ++i) {
        const double x = -p_.half_width_mm + i * p_.texel_mm;
        double m = 1.0;
        if (p_.textured)
          m += p_.modulation * std::sin(2 * kPi * x / 47.0 + 0.3) * std::sin(2 * kPi * y / 37.0 + 1.1) +
               0.5 * p_.modulation * std::sin(2 * kPi * (x + y) / 61.0);
        shade[static_cast<std::size_t>(j) * tex_w_ + i] = m;
      }
    }
    for (const auto& b : blobs_) {
      const double reach = 4.0 * b.sigma_mm;
      const int i0 = std::max(0, static_cast<int>((b.x_mm - reach + p_.half_width_mm) / p_.texel_mm));
      const int i1 = std::min(tex_w_ - 1, static_cast<int>((b.x_mm + reach + p_.half_width_mm) / p_.texel_mm) + 1);
      const int j0 = std::max(0, static_cast<int>((b.y_mm - reach + p_.half_height_mm) / p_.texel_mm));
      const int j1 = std::min(tex_h_ - 1, static_cast<int>((b.y_mm + reach + p_.half_height_mm) / p_.texel_mm) + 1);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          const double x = -p_.half_width_mm + i * p_.texel_mm - b.x_mm;
          const double y = -p_.half_height_mm + j * p_.texel_mm - b.y_mm;
          shade[static_cast<std::size_t>(j) * tex_w_ + i] *=
              1.0 - b.strength * std::exp(-0.5 * (x * x + y * y) / (b.sigma_mm * b.sigma_mm));
        }
    }
    texture_.resize(shade.size() * 3);
    for (std::size_t k = 0; k < shade.size(); ++k)
      for (int c = 0; c < 3; ++c) texture_[3 * k + c] = static_cast<float>(p_.base_rgb[c] * shade[k]);
  }

  // Gaussian-filtered white noise, rescaled to unit variance and offset by 1
  // so tissue is never confused with the zero (air) level.
  void build_volume() {
    const double s = p_.volume_spacing_mm;
    const double margin = 2.0;
    const double c0 = p_.height_coeffs[0];
    vol_origin_ = {-p_.half_width_mm - margin, -p_.half_height_mm - margin, -p_.volume_depth_mm};
    vol_dims_ = {static_cast<int>(std::ceil(2 * (p_.half_width_mm + margin) / s)) + 1,
                 static_cast<int>(std::ceil(2 * (p_.half_height_mm + margin) / s)) + 1,
                 static_cast<int>(std::ceil((p_.volume_depth_mm + c0 + 6.0) / s)) + 1};
    const std::size_t n = static_cast<std::size_t>(vol_dims_[0]) * vol_dims_[1] * vol_dims_[2];
    std::vector<float> a(n), b(n);
    std::mt19937_64 gen(p_.seed * 0x2545F4914F6CDD1Dull + 17);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (auto& x : a) x = normal(gen);

    const double sigma_vox = p_.speckle_sigma_mm / s;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_vox));
    std::vector<float> k(2 * radius + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) ksum += k[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma_vox * sigma_vox)));
    double k2 = 0.0;
    for (auto& w : k) {
      w = static_cast<float>(w / ksum);
      k2 += static_cast<double>(w) * w;
    }
    const int nx = vol_dims_[0], ny = vol_dims_[1], nz = vol_dims_[2];
    auto idx = [&](int i, int j, int l) { return (static_cast<std::size_t>(l) * ny + j) * nx + i; };
    // Separable blur with clamped borders along x, y, z.
    for (int l = 0; l < nz; ++l)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          float acc = 0.0f;
          for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * a[idx(std::clamp(i + t, 0, nx - 1), j, l)];
          b[idx(i, j, l)] = acc;
        }
    for (int l = 0; l < nz; ++l)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          float acc = 0.0f;
          for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * b[idx(i, std::clamp(j + t, 0, ny - 1), l)];
          a[idx(i, j, l)] = acc;
        }
    const float scale = static_cast<float>(0.3 / std::sqrt(k2 * k2 * k2));
    for (int l = 0; l < nz; ++l)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          float acc = 0.0f;
          for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * a[idx(i, j, std::clamp(l + t, 0, nz - 1))];
          b[idx(i, j, l)] = 1.0f + scale * acc;
        }
    volume_ = std::move(b);
  }

  PhantomParams p_;
  std::vector<Blob> blobs_;
  int tex_w_ = 0, tex_h_ = 0;
  std::vector<float> texture_;
  std::array<double, 3> vol_origin_{};
  std::array<int, 3> vol_dims_{};
  std::vector<float> volume_;
};

}  // namespace tscan
