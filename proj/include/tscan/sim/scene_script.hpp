#pragma once

// Plain-text scene scripts. One `key = value` per line, `#` starts a
// comment, blank lines are ignored. Keys used by the simulator:
//
//   seed             = 1          depth-noise seed (also seeds free-form motion)
//   noise_sigma_mm   = 0.3        depth noise standard deviation
//   image_noise      = 0          RGB noise standard deviation (grey levels)
//   profile          = 1          respiratory profile 1, 2 or 3
//   axis             = x          x, y, z, free or static
//   amplitude_scale  = 1          multiplies the profile amplitude
//   rotation_wander_deg = 0      free-form rotational wander (per-axis std)
//   duration_s       = 30
//   phantom.seed     = 7          texture / volume seed
//   phantom.textured = 1          0 renders a uniform surface
//   phantom.blobs    = 50
//   occluder         = t_on t_off u0 v0 u1 v1 [vel_u vel_v]   (repeatable)
//
// Unknown keys are kept for other consumers (tracker, servo, harness).

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tscan/errors.hpp"
#include "tscan/sim/motion.hpp"
#include "tscan/sim/phantom.hpp"
#include "tscan/sim/scene.hpp"

namespace tscan {

/// Ordered multimap of keys to raw values; later entries override earlier
/// ones for scalar lookups, all entries are kept for repeatable keys.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

  bool has(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.first == key) return true;
    return false;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    std::string out = fallback;
    for (const auto& e : entries_)
      if (e.first == key) out = e.second;
    return out;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      if (e.first == key) out.push_back(e.second);
    return out;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    }
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    const double x = number(key, static_cast<double>(fallback));
    if (x != static_cast<double>(static_cast<std::int64_t>(x)))
      throw ConfigError("key '" + key + "' expects an integer");
    return static_cast<std::int64_t>(x);
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
  }

  /// Sorted last-wins view, used to echo configuration into reports.
  std::map<std::string, std::string> resolved() const {
    std::map<std::string, std::string> out;
    for (const auto& e : entries_) {
      if (out.count(e.first) && e.first == "occluder")
        out[e.first] += "; " + e.second;
      else
        out[e.first] = e.second;
    }
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Parses `key = value` lines; also accepts a single `key=value` token.
inline void parse_key_value_line(const std::string& raw, KeyValues& out, int line_no = 0) {
  std::string line = raw.substr(0, raw.find('#'));
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
  const std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
  out.set(key, trim(line.substr(eq + 1)));
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) parse_key_value_line(line, kv, ++n);
  return kv;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_key_values(in);
}

struct MotionSpec {
  int profile = 1;
  std::string axis = "x";  // x, y, z, free, static
  double amplitude_scale = 1.0;
  double rotation_wander_deg = 0.0;
  double duration_s = 30.0;
  std::uint64_t seed = 1;
};

inline MotionProfile make_motion(const MotionSpec& spec) {
  MotionProfile m;
  if (spec.axis == "x" || spec.axis == "y" || spec.axis == "z") {
    const Axis a = spec.axis == "x" ? Axis::X : spec.axis == "y" ? Axis::Y : Axis::Z;
    m = MotionProfile::respiratory(spec.profile, a);
  } else if (spec.axis == "free") {
    m = MotionProfile::free_form(spec.profile, spec.seed, spec.duration_s + 1.0);
    auto walk = *m.walk();
    walk.sigma_mm *= spec.amplitude_scale;
    walk.rotation_sigma_deg = spec.rotation_wander_deg;
    m.set_walk(walk);
  } else if (spec.axis == "static") {
    respiratory_profile(spec.profile);  // still validates the index
  } else {
    throw ConfigError("axis must be x, y, z, free or static, got '" + spec.axis + "'");
  }
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    auto s = m.axis(a);
    if (s) {
      s->amplitude_mm *= spec.amplitude_scale;
      m.set_axis(a, s);
    }
  }
  return m;
}

struct SceneScript {
  PhantomParams phantom;
  MotionSpec motion;
  OccluderScript occluders;
  SceneConfig scene;
};

inline OccluderEvent parse_occluder(const std::string& value) {
  std::istringstream in(value);
  std::vector<double> x;
  double d;
  while (in >> d) x.push_back(d);
  if (!in.eof() || (x.size() != 6 && x.size() != 8))
    throw ConfigError("occluder expects 't_on t_off u0 v0 u1 v1 [vel_u vel_v]', got '" + value + "'");
  OccluderEvent e;
  e.t_on_s = x[0];
  e.t_off_s = x[1];
  if (!(e.t_off_s > e.t_on_s)) throw ConfigError("occluder must switch off after it switches on");
  e.polygon = rectangle_polygon(x[2], x[3], x[4], x[5]);
  if (x.size() == 8) e.velocity_px_s = Vec2(x[6], x[7]);
  return e;
}

inline SceneScript scene_script_from(const KeyValues& kv) {
  SceneScript s;
  s.scene.seed = static_cast<std::uint64_t>(kv.integer("seed", 1));
  s.scene.noise_sigma_mm = kv.number("noise_sigma_mm", 0.3);
  if (s.scene.noise_sigma_mm < 0.0) throw ConfigError("noise_sigma_mm must be non-negative");
  s.scene.image_noise_sigma = kv.number("image_noise", 0.0);
  s.motion.profile = static_cast<int>(kv.integer("profile", 1));
  if (s.motion.profile < 1 || s.motion.profile > 3) throw ConfigError("profile must be 1, 2 or 3");
  s.motion.axis = kv.get("axis", "x");
  s.motion.amplitude_scale = kv.number("amplitude_scale", 1.0);
  s.motion.rotation_wander_deg = kv.number("rotation_wander_deg", 0.0);
  s.motion.duration_s = kv.number("duration_s", 30.0);
  if (!(s.motion.duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  s.motion.seed = s.scene.seed;
  s.phantom.seed = static_cast<std::uint64_t>(kv.integer("phantom.seed", static_cast<std::int64_t>(s.phantom.seed)));
  s.phantom.textured = kv.flag("phantom.textured", true);
  s.phantom.blob_count = static_cast<int>(kv.integer("phantom.blobs", s.phantom.blob_count));
  for (const auto& v : kv.all("occluder")) s.occluders.push_back(parse_occluder(v));
  make_motion(s.motion);  // surfaces axis errors early
  return s;
}

}  // namespace tscan
