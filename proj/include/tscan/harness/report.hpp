#pragma once

// Report files. Per-frame CSV (full double precision) plus a JSON summary
// echoing the configuration. Output depends only on the inputs, so reruns
// with the same config and seed are byte-identical.
//
// Metrics CSV columns: index, t_s, translation_mm, rotation_deg, then the
// record's extra columns in order.
// NCC CSV columns: index, t_s, ncc_on, defined_on, ncc_off, defined_off.

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "tscan/errors.hpp"
#include "tscan/harness/metrics.hpp"

namespace tscan {

struct ReportMeta {
  std::string experiment;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
};

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed: " + std::strerror(errno));
}

inline nlohmann::json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

inline nlohmann::json meta_json(const ReportMeta& meta) {
  nlohmann::json j;
  j["experiment"] = meta.experiment;
  j["seed"] = meta.seed;
  j["config"] = meta.config;
  return j;
}

}  // namespace detail

inline std::string metrics_csv(const MetricsRecord& r) {
  std::string s = "index,t_s,translation_mm,rotation_deg";
  for (const auto& n : r.extra_names) s += "," + n;
  s += "\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& x = r.samples[i];
    s += std::to_string(i) + "," + format_double(x.t_s) + "," + format_double(x.error.translation_mm) + "," +
         format_double(x.error.rotation_deg);
    for (double e : x.extra) s += "," + format_double(e);
    s += "\n";
  }
  return s;
}

inline nlohmann::json metrics_summary_json(const MetricsRecord& r, const ReportMeta& meta) {
  nlohmann::json j = detail::meta_json(meta);
  j["frames"] = r.size();
  j["translation_mm"] = detail::mean_std_json(r.translation());
  j["rotation_deg"] = detail::mean_std_json(r.rotation());
  for (std::size_t i = 0; i < r.extra_names.size(); ++i) j["extra"][r.extra_names[i]] = detail::mean_std_json(r.extra(i));
  return j;
}

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json. Refuses empty records.
inline void write_report(const MetricsRecord& r, const ReportMeta& meta, const std::filesystem::path& dir,
                         const std::string& stem) {
  if (r.empty()) throw Error("refusing to write an empty metrics record");
  detail::write_text(dir / (stem + ".csv"), metrics_csv(r));
  detail::write_text(dir / (stem + ".json"), metrics_summary_json(r, meta).dump(2) + "\n");
}

inline std::string ncc_csv(const NccSeries& on, const NccSeries& off) {
  if (on.samples.size() != off.samples.size()) throw std::invalid_argument("paired NCC series differ in length");
  std::string s = "index,t_s,ncc_on,defined_on,ncc_off,defined_off\n";
  for (std::size_t i = 0; i < on.samples.size(); ++i) {
    const auto& a = on.samples[i];
    const auto& b = off.samples[i];
    s += std::to_string(i) + "," + format_double(a.t_s) + "," + format_double(a.score.score) + "," +
         (a.score.defined ? "1" : "0") + "," + format_double(b.score.score) + "," + (b.score.defined ? "1" : "0") +
         "\n";
  }
  return s;
}

inline nlohmann::json ncc_summary_json(const NccSeries& on, const NccSeries& off, const ReportMeta& meta) {
  nlohmann::json j = detail::meta_json(meta);
  j["frames"] = on.samples.size();
  j["mean_ncc_on"] = on.mean();
  j["mean_ncc_off"] = off.mean();
  j["difference"] = on.mean() - off.mean();
  return j;
}

inline void write_report(const NccSeries& on, const NccSeries& off, const ReportMeta& meta,
                         const std::filesystem::path& dir, const std::string& stem) {
  if (on.samples.empty()) throw Error("refusing to write an empty NCC series");
  detail::write_text(dir / (stem + ".csv"), ncc_csv(on, off));
  detail::write_text(dir / (stem + ".json"), ncc_summary_json(on, off, meta).dump(2) + "\n");
}

}  // namespace tscan
