// Command-line front end for the simulated experiments.
//
//   tscan_cli tracking-accuracy --profile 3 --axis z --out results/
//   tscan_cli servo-accuracy --table
//   tscan_cli ncc-stability --axis x --duration 15
//
// Exit codes: 0 success, 1 configuration error, 2 tracking failure, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tscan/tscan.hpp"

namespace {

using namespace tscan;

enum ExitCode { kOk = 0, kConfig = 1, kTracking = 2, kIo = 3 };

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<int> profile;
  std::optional<std::string> axis;
  std::optional<long long> seed;
  std::optional<double> duration;
  std::optional<double> noise;
  std::string out;
  bool table = false;
  bool dump_frames = false;
};

KeyValues gather(const std::string& kind, const Options& o) {
  KeyValues kv = o.config_path.empty() ? KeyValues{} : load_key_values(o.config_path);
  kv.set("experiment", kind);
  if (o.profile) kv.set("profile", std::to_string(*o.profile));
  if (o.axis) kv.set("axis", *o.axis);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  if (o.duration) kv.set("duration_s", format_double(*o.duration));
  if (o.noise) kv.set("noise_sigma_mm", format_double(*o.noise));
  if (!o.out.empty()) kv.set("output_dir", o.out);
  if (o.dump_frames) kv.set("dump_frames", "1");
  for (const auto& s : o.overrides) parse_key_value_line(s, kv);
  return kv;
}

std::string stem_of(const ExperimentConfig& c) {
  const std::string kind = c.kind == "tracking-accuracy" ? "tracking" : c.kind == "servo-accuracy" ? "servo" : "ncc";
  return kind + "_p" + std::to_string(c.scene.motion.profile) + "_" + c.scene.motion.axis;
}

// Output locations are left out of the echo so reports compare equal across directories.
ReportMeta meta_of(const ExperimentConfig& c) {
  auto echo = c.raw.resolved();
  echo.erase("output_dir");
  echo.erase("dump_frames");
  return {c.kind, c.seed(), echo};
}

void write_lines(const std::filesystem::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::string text = header.empty() ? "" : header + "\n";
  for (const auto& r : rows) text += r + "\n";
  detail::write_text(path, text);
}

struct Row {
  std::string label;
  MetricsRecord record;
};

void print_metrics_table(const std::string& title, const std::vector<Row>& rows) {
  std::printf("%s\n%-14s %-22s %-22s\n", title.c_str(), "trial", "translation (mm)", "rotation (deg)");
  MetricsRecord pooled;
  for (const auto& r : rows) {
    const auto t = r.record.translation(), a = r.record.rotation();
    std::printf("%-14s %.3f +- %.3f          %.3f +- %.3f\n", r.label.c_str(), t.mean, t.std, a.mean, a.std);
    for (const auto& s : r.record.samples) pooled.add(s.t_s, s.error);
  }
  const auto t = pooled.translation(), a = pooled.rotation();
  std::printf("%-14s %.3f +- %.3f          %.3f +- %.3f\n", "total", t.mean, t.std, a.mean, a.std);
}

MetricsRecord run_one(const ExperimentConfig& c) {
  const std::filesystem::path out = c.output_dir;
  if (c.kind == "tracking-accuracy") {
    TrackingRun run = run_tracking_accuracy(c);
    if (!c.output_dir.empty()) {
      write_report(run.record, meta_of(c), out, stem_of(c));
      write_lines(out / (stem_of(c) + "_tracker.jsonl"), "", run.log_lines);
    }
    return run.record;
  }
  ServoRun run = run_servo_accuracy(c);
  if (!c.output_dir.empty()) {
    write_report(run.record, meta_of(c), out, stem_of(c));
    write_lines(out / (stem_of(c) + "_commands.csv"), command_csv_header(), run.command_rows);
  }
  return run.record;
}

int run_ncc(const ExperimentConfig& c, bool table) {
  std::vector<ExperimentConfig> configs;
  if (table) {
    for (const char* axis : {"x", "y", "z"}) {
      KeyValues kv = c.raw;
      kv.set("axis", axis);
      configs.push_back(experiment_config_from(kv));
    }
  } else {
    configs.push_back(c);
  }
  std::printf("%-14s %-10s %-10s %-10s\n", "trial", "NCC on", "NCC off", "difference");
  for (const auto& cfg : configs) {
    const NccRun r = run_ncc_stability(cfg);
    if (!cfg.output_dir.empty()) write_report(r.on.ncc, r.off.ncc, meta_of(cfg), cfg.output_dir, stem_of(cfg));
    const std::string label = "P" + std::to_string(cfg.scene.motion.profile) + " " + cfg.scene.motion.axis;
    std::printf("%-14s %-10.3f %-10.3f %-10.3f\n", label.c_str(), r.on.ncc.mean(), r.off.ncc.mean(),
                r.on.ncc.mean() - r.off.ncc.mean());
  }
  return kOk;
}

int run_kind(const std::string& kind, const Options& o) {
  const ExperimentConfig base = experiment_config_from(gather(kind, o));
  if (kind == "ncc-stability") return run_ncc(base, o.table);

  if (!o.table) {
    const MetricsRecord rec = run_one(base);
    const auto t = rec.translation(), a = rec.rotation();
    std::printf("%s: translation %.3f +- %.3f mm, rotation %.3f +- %.3f deg over %zu samples\n", stem_of(base).c_str(),
                t.mean, t.std, a.mean, a.std, rec.size());
    return kOk;
  }

  // Trial grid: every profile on each axis, plus free-form runs.
  std::vector<std::pair<int, std::string>> trials;
  for (int p = 1; p <= 3; ++p)
    for (const char* axis : {"x", "y", "z"}) trials.emplace_back(p, axis);
  if (kind == "tracking-accuracy")
    for (int p = 1; p <= 3; ++p) trials.emplace_back(p, "free");
  else
    trials.emplace_back(1, "free");

  std::vector<Row> rows;
  for (const auto& [p, axis] : trials) {
    KeyValues kv = base.raw;
    kv.set("profile", std::to_string(p));
    kv.set("axis", axis);
    const ExperimentConfig c = experiment_config_from(kv);
    rows.push_back({"P" + std::to_string(p) + " " + axis, run_one(c)});
  }
  print_metrics_table(kind == "tracking-accuracy" ? "Tissue tracking error (mean +- std)"
                                                  : "Visual servoing error (mean +- std)",
                      rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated tissue tracking and probe servoing experiments"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  const std::pair<const char*, const char*> kinds[] = {
      {"tracking-accuracy", "tissue pose error of the tracker against ground truth"},
      {"servo-accuracy", "probe pose error of the closed servo loop"},
      {"ncc-stability", "ultrasound NCC against the first slice, compensation on and off"},
  };
  for (const auto& [kind, about] : kinds) {
    auto* sub = app.add_subcommand(kind, about);
    sub->add_option("--config", o.config_path, "key = value config file");
    sub->add_option("--set", o.overrides, "extra key=value override (repeatable)");
    sub->add_option("--profile", o.profile, "respiratory profile 1-3");
    sub->add_option("--axis", o.axis, "x, y, z, free or static");
    sub->add_option("--seed", o.seed, "simulation and RANSAC seed");
    sub->add_option("--duration", o.duration, "simulated seconds");
    sub->add_option("--noise", o.noise, "depth noise sigma in mm");
    sub->add_option("--out", o.out, "output directory for CSV/JSON reports");
    sub->add_flag("--table", o.table, "run the full trial grid and print a summary table");
    sub->add_flag("--dump-frames", o.dump_frames, "write every simulated cloud to <out>/frames");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return run_kind(chosen, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const tscan::Error& e) {
    std::cerr << "tracking failure: " << e.what() << "\n";
    return kTracking;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
}
