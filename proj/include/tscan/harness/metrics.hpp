#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tscan/errors.hpp"
#include "tscan/harness/ncc.hpp"
#include "tscan/se3.hpp"

namespace tscan {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single sample
};

inline MeanStd mean_std(const std::vector<double>& x) {
  MeanStd r;
  if (x.empty()) return r;
  for (double v : x) r.mean += v;
  r.mean /= static_cast<double>(x.size());
  if (x.size() < 2) return r;
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(x.size() - 1));
  return r;
}

struct MetricsSample {
  double t_s = 0.0;
  PoseError error;
  std::vector<double> extra;  // one value per MetricsRecord::extra_names entry
};

/// Per-frame pose errors plus optional named diagnostic columns.
struct MetricsRecord {
  std::vector<std::string> extra_names;
  std::vector<MetricsSample> samples;

  void add(double t, const PoseError& e, std::vector<double> extra = {}) {
    if (extra.size() != extra_names.size()) throw std::invalid_argument("extra column count mismatch");
    samples.push_back({t, e, std::move(extra)});
  }
  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }

  MeanStd translation() const { return mean_std(column([](const MetricsSample& s) { return s.error.translation_mm; })); }
  MeanStd rotation() const { return mean_std(column([](const MetricsSample& s) { return s.error.rotation_deg; })); }
  MeanStd extra(std::size_t i) const { return mean_std(column([i](const MetricsSample& s) { return s.extra.at(i); })); }

 private:
  template <typename F>
  std::vector<double> column(F f) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(f(s));
    return out;
  }
};

struct NccSample {
  double t_s = 0.0;
  NccScore score;
};

struct NccSeries {
  bool motion_compensation = true;
  std::vector<NccSample> samples;

  /// Undefined scores count as 0.
  double mean() const {
    if (samples.empty()) return 0.0;
    double s = 0.0;
    for (const auto& x : samples) s += x.score.score;
    return s / static_cast<double>(samples.size());
  }
};

}  // namespace tscan
