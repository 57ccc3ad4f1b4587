#pragma once

#include "tscan/errors.hpp"

namespace tscan {

/// Axis-aligned box in HSV space; hue in degrees. If h_lo > h_hi the hue
/// range wraps through 0.
struct HsvBox {
  double h_lo = 0.0, h_hi = 40.0;
  double s_lo = 0.3, s_hi = 1.0;
  double v_lo = 0.15, v_hi = 1.0;
};

/// Thresholds of the tracking loop. Defaults are empirical choices; none are
/// fixed by the method itself apart from the 20 x 25 ROI size and the
/// three-point minimal sample.
struct TrackerConfig {
  int roi_count = 12;
  int roi_width = 20;
  int roi_height = 25;

  HsvBox tissue_hsv;

  double occlusion_tissue_fraction = 0.6;
  // Bhattacharyya coefficient between 32-bin intensity histograms.
  double appearance_match_threshold = 0.8;
  // Largest admissible normalized Hamming distance between patch signatures.
  double descriptor_max_distance = 0.35;

  int ransac_iterations = 100;
  double ransac_inlier_threshold_mm = 1.5;

  int search_window_px = 15;
  // Zero-mean NCC below this after matching stops the ROI.
  double ncc_floor = 0.5;

  double min_corner_score = 1.0;
  double corner_window_sigma_px = 6.0;
  // ROIs keep this many pixels from the image border at initialization.
  int init_border_px = 20;

  void validate() const {
    if (roi_count < 6) throw ConfigError("roi_count must be >= 6");
    if (!(ransac_inlier_threshold_mm > 0.0)) throw ConfigError("ransac_inlier_threshold_mm must be > 0");
    if (roi_width < 3 || roi_height < 3) throw ConfigError("ROI must be at least 3x3 pixels");
    if (ransac_iterations < 1) throw ConfigError("ransac_iterations must be >= 1");
    if (search_window_px < 1) throw ConfigError("search_window_px must be >= 1");
    if (occlusion_tissue_fraction < 0.0 || occlusion_tissue_fraction > 1.0)
      throw ConfigError("occlusion_tissue_fraction must lie in [0, 1]");
  }
};

}  // namespace tscan
