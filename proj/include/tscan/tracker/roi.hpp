#pragma once

// Region-of-interest lifecycle: selection on the reference frame, frame-to-
// frame block matching, occlusion gating, and re-anchoring by projection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tscan/errors.hpp"
#include "tscan/image.hpp"
#include "tscan/se3.hpp"
#include "tscan/surface.hpp"
#include "tscan/tracker/appearance.hpp"
#include "tscan/tracker/config.hpp"
#include "tscan/tracker/segmentation.hpp"

namespace tscan {

enum class RoiState { Tracking, Stopped };

inline const char* to_string(RoiState s) { return s == RoiState::Tracking ? "tracking" : "stopped"; }

struct Roi {
  int id = 0;
  // Top-left corner, sub-pixel.
  double u = 0.0;
  double v = 0.0;
  int width = 20;
  int height = 25;
  RoiState state = RoiState::Tracking;
  AppearanceDescriptor reference_appearance;
  // Camera-frame point captured on the reference frame.
  Vec3 reference_point = Vec3::Zero();
  // Camera-frame point under the ROI centre on the latest frame.
  Vec3 current_point = Vec3::Zero();

  Vec2 center() const { return {u + (width - 1) / 2.0, v + (height - 1) / 2.0}; }
  PixelRect pixel_rect() const {
    return {static_cast<int>(std::lround(u)), static_cast<int>(std::lround(v)), width, height};
  }
  void set_center(const Vec2& c) {
    u = c.x() - (width - 1) / 2.0;
    v = c.y() - (height - 1) / 2.0;
  }
  bool tracking() const { return state == RoiState::Tracking; }
};

inline double tissue_fraction(const SegmentationMask& mask, const PixelRect& r) {
  int count = 0;
  for (int v = r.v; v < r.v + r.height; ++v)
    for (int u = r.u; u < r.u + r.width; ++u) count += mask(u, v) ? 1 : 0;
  return static_cast<double>(count) / (static_cast<double>(r.width) * r.height);
}

inline bool appearance_matches(const AppearanceDescriptor& reference, const AppearanceDescriptor& current,
                               const TrackerConfig& config) {
  return bhattacharyya(reference, current) >= config.appearance_match_threshold &&
         signature_distance(reference, current) <= config.descriptor_max_distance;
}

/// Minimum eigenvalue of the Gaussian-weighted structure tensor at every pixel.
inline GrayImage corner_response(const GrayImage& img, double sigma) {
  const int w = img.width(), h = img.height();
  Grid<float> ixx(w, h, 0.0f), iyy(w, h, 0.0f), ixy(w, h, 0.0f);
  for (int v = 1; v + 1 < h; ++v)
    for (int u = 1; u + 1 < w; ++u) {
      const float gx = 0.5f * (img(u + 1, v) - img(u - 1, v));
      const float gy = 0.5f * (img(u, v + 1) - img(u, v - 1));
      ixx(u, v) = gx * gx;
      iyy(u, v) = gy * gy;
      ixy(u, v) = gx * gy;
    }

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> kernel(2 * radius + 1);
  float ksum = 0.0f;
  for (int i = -radius; i <= radius; ++i) ksum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& k : kernel) k /= ksum;

  auto blur = [&](Grid<float>& g) {
    Grid<float> tmp(w, h, 0.0f);
    for (int v = 0; v < h; ++v)
      for (int u = radius; u + radius < w; ++u) {
        float s = 0.0f;
        for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * g(u + i, v);
        tmp(u, v) = s;
      }
    for (int v = radius; v + radius < h; ++v)
      for (int u = 0; u < w; ++u) {
        float s = 0.0f;
        for (int i = -radius; i <= radius; ++i) s += kernel[i + radius] * tmp(u, v + i);
        g(u, v) = s;
      }
  };
  blur(ixx);
  blur(iyy);
  blur(ixy);

  GrayImage score(w, h, 0.0f);
  for (std::size_t i = 0; i < score.size(); ++i) {
    const float a = ixx.data()[i], c = iyy.data()[i], b = ixy.data()[i];
    const float half_trace = 0.5f * (a + c);
    const float disc = std::sqrt(0.25f * (a - c) * (a - c) + b * b);
    score.data()[i] = half_trace - disc;
  }
  return score;
}

/// Picks `roi_count` non-overlapping ROIs on tissue, ranked by corner
/// response. Throws InsufficientTexture when too few candidates qualify.
inline std::vector<Roi> init_rois(const GrayImage& gray, const SegmentationMask& mask,
                                  const OrganizedPointCloud& cloud, const TrackerConfig& config) {
  config.validate();
  const int w = gray.width(), h = gray.height();
  const GrayImage score = corner_response(gray, config.corner_window_sigma_px);

  // Summed-area table of the mask for the all-tissue test.
  Grid<int> sat(w + 1, h + 1, 0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) sat(u + 1, v + 1) = mask(u, v) + sat(u, v + 1) + sat(u + 1, v) - sat(u, v);
  auto tissue_count = [&](const PixelRect& r) {
    return sat(r.u + r.width, r.v + r.height) - sat(r.u, r.v + r.height) - sat(r.u + r.width, r.v) + sat(r.u, r.v);
  };

  struct Candidate {
    float score;
    int cu, cv;
  };
  std::vector<Candidate> candidates;
  const int half_w = (config.roi_width - 1) / 2, half_h = (config.roi_height - 1) / 2;
  const int margin = config.init_border_px;
  for (int cv = margin + half_h; cv + config.roi_height - half_h + margin <= h; ++cv) {
    for (int cu = margin + half_w; cu + config.roi_width - half_w + margin <= w; ++cu) {
      const float s = score(cu, cv);
      if (!(s >= config.min_corner_score)) continue;
      bool is_max = true;
      for (int dv = -2; dv <= 2 && is_max; ++dv)
        for (int du = -2; du <= 2; ++du) {
          if ((du || dv) && score(cu + du, cv + dv) > s) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      const PixelRect r{cu - half_w, cv - half_h, config.roi_width, config.roi_height};
      if (tissue_count(r) != r.width * r.height) continue;
      candidates.push_back({s, cu, cv});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cv != b.cv) return a.cv < b.cv;
    return a.cu < b.cu;
  });

  std::vector<Roi> rois;
  for (const auto& c : candidates) {
    if (static_cast<int>(rois.size()) == config.roi_count) break;
    Roi roi;
    roi.width = config.roi_width;
    roi.height = config.roi_height;
    roi.u = c.cu - half_w;
    roi.v = c.cv - half_h;
    const PixelRect r = roi.pixel_rect();
    if (std::any_of(rois.begin(), rois.end(), [&](const Roi& o) { return o.pixel_rect().intersects(r); })) continue;
    const Vec2 center = roi.center();
    try {
      roi.reference_point = point_at_pixel(cloud, center.x(), center.y());
    } catch (const InvalidPixel&) {
      continue;
    }
    roi.current_point = roi.reference_point;
    roi.reference_appearance = describe_patch(gray, r);
    roi.id = static_cast<int>(rois.size());
    rois.push_back(roi);
  }
  if (static_cast<int>(rois.size()) < config.roi_count)
    throw InsufficientTexture("only " + std::to_string(rois.size()) + " of " + std::to_string(config.roi_count) +
                              " ROIs found above the corner threshold");
  return rois;
}

/// Best zero-mean NCC placement of `templ` inside `img` around the integer
/// top-left (bu, bv), searched within +-window pixels.
struct MatchResult {
  double u = 0.0;
  double v = 0.0;
  double score = -1.0;
};

inline MatchResult match_template(const GrayImage& img, const std::vector<float>& templ, int tw, int th, int bu, int bv,
                                  int window) {
  const int n = tw * th;
  double tmean = 0.0;
  for (float t : templ) tmean += t;
  tmean /= n;
  std::vector<float> tz(n);
  double tnorm = 0.0;
  for (int i = 0; i < n; ++i) {
    tz[i] = static_cast<float>(templ[i] - tmean);
    tnorm += static_cast<double>(tz[i]) * tz[i];
  }
  MatchResult best;
  if (tnorm <= 1e-6) return best;

  const int side = 2 * window + 1;
  std::vector<double> scores(static_cast<std::size_t>(side) * side, -2.0);
  int best_i = -1;
  for (int dy = -window; dy <= window; ++dy) {
    for (int dx = -window; dx <= window; ++dx) {
      const int u0 = bu + dx, v0 = bv + dy;
      if (u0 < 0 || v0 < 0 || u0 + tw > img.width() || v0 + th > img.height()) continue;
      double sum = 0.0, sum_sq = 0.0, cross = 0.0;
      for (int j = 0; j < th; ++j) {
        const float* row = img.row(v0 + j) + u0;
        const float* trow = tz.data() + j * tw;
        float s = 0.0f, ss = 0.0f, c = 0.0f;
        for (int i = 0; i < tw; ++i) {
          s += row[i];
          ss += row[i] * row[i];
          c += row[i] * trow[i];
        }
        sum += s;
        sum_sq += ss;
        cross += c;
      }
      const double var = sum_sq - sum * sum / n;
      const double score = var > 1e-6 ? cross / std::sqrt(var * tnorm) : 0.0;
      const int idx = (dy + window) * side + (dx + window);
      scores[idx] = score;
      if (best_i < 0 || score > scores[best_i]) best_i = idx;
    }
  }
  if (best_i < 0) return best;

  const int bx = best_i % side, by = best_i / side;
  auto parabola = [](double l, double c, double r) {
    const double denom = l - 2.0 * c + r;
    if (l < -1.5 || r < -1.5 || !(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
  };
  double du = 0.0, dv = 0.0;
  if (bx > 0 && bx + 1 < side) du = parabola(scores[best_i - 1], scores[best_i], scores[best_i + 1]);
  if (by > 0 && by + 1 < side) dv = parabola(scores[best_i - side], scores[best_i], scores[best_i + side]);
  best.u = bu + (bx - window) + du;
  best.v = bv + (by - window) + dv;
  best.score = scores[best_i];
  return best;
}

/// Moves every Tracking ROI to the best NCC match of its previous patch and
/// refreshes its 3D point. ROIs that match poorly, leave the image, or land
/// on a depth hole become Stopped.
inline std::vector<Roi> track_rois(const GrayImage& prev, const GrayImage& img, const OrganizedPointCloud& cloud,
                                   std::vector<Roi> rois, const TrackerConfig& config) {
  std::vector<float> templ;
  for (auto& roi : rois) {
    if (!roi.tracking()) continue;
    templ.resize(static_cast<std::size_t>(roi.width) * roi.height);
    for (int j = 0; j < roi.height; ++j)
      for (int i = 0; i < roi.width; ++i) templ[j * roi.width + i] = sample_bilinear(prev, roi.u + i, roi.v + j);
    const MatchResult m = match_template(img, templ, roi.width, roi.height, static_cast<int>(std::lround(roi.u)),
                                         static_cast<int>(std::lround(roi.v)), config.search_window_px);
    if (m.score < config.ncc_floor) {
      roi.state = RoiState::Stopped;
      continue;
    }
    roi.u = m.u;
    roi.v = m.v;
    if (!roi.pixel_rect().inside(img.width(), img.height())) {
      roi.state = RoiState::Stopped;
      continue;
    }
    const Vec2 c = roi.center();
    try {
      roi.current_point = point_at_pixel(cloud, c.x(), c.y());
    } catch (const InvalidPixel&) {
      roi.state = RoiState::Stopped;
    }
  }
  return rois;
}

/// Occlusion and appearance gate for one ROI.
inline RoiState check_occlusion(const Roi& roi, const SegmentationMask& mask, const GrayImage& gray,
                                const TrackerConfig& config) {
  const PixelRect r = roi.pixel_rect();
  if (!r.inside(gray.width(), gray.height())) return RoiState::Stopped;
  if (tissue_fraction(mask, r) < config.occlusion_tissue_fraction) return RoiState::Stopped;
  if (!appearance_matches(roi.reference_appearance, describe_patch(gray, r), config)) return RoiState::Stopped;
  return RoiState::Tracking;
}

/// Re-anchors Stopped ROIs at the projection of their reference point
/// through `motion`. Only indices listed in `eligible` are considered; a
/// candidate resumes Tracking when it lands inside the image, on tissue,
/// with matching appearance and valid depth.
inline std::vector<Roi> reinitialize_rois(std::vector<Roi> rois, std::span<const std::size_t> eligible,
                                          const RigidTransform& motion, const GrayImage& gray,
                                          const SegmentationMask& mask, const OrganizedPointCloud& cloud,
                                          const CameraIntrinsics& k, const TrackerConfig& config) {
  for (std::size_t idx : eligible) {
    Roi& roi = rois.at(idx);
    if (roi.tracking()) continue;
    Vec2 px;
    try {
      px = project(k, motion, roi.reference_point);
    } catch (const BehindCamera&) {
      continue;
    }
    Roi candidate = roi;
    candidate.set_center(px);
    const PixelRect r = candidate.pixel_rect();
    if (!r.inside(gray.width(), gray.height())) continue;
    if (tissue_fraction(mask, r) < config.occlusion_tissue_fraction) continue;
    if (!appearance_matches(roi.reference_appearance, describe_patch(gray, r), config)) continue;
    try {
      candidate.current_point = point_at_pixel(cloud, px.x(), px.y());
    } catch (const InvalidPixel&) {
      continue;
    } catch (const std::out_of_range&) {
      continue;
    }
    candidate.state = RoiState::Tracking;
    roi = candidate;
  }
  return rois;
}

/// Convenience overload: every Stopped ROI is eligible.
inline std::vector<Roi> reinitialize_rois(std::vector<Roi> rois, const RigidTransform& motion, const GrayImage& gray,
                                          const SegmentationMask& mask, const OrganizedPointCloud& cloud,
                                          const CameraIntrinsics& k, const TrackerConfig& config) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < rois.size(); ++i)
    if (!rois[i].tracking()) eligible.push_back(i);
  return reinitialize_rois(std::move(rois), eligible, motion, gray, mask, cloud, k, config);
}

}  // namespace tscan
