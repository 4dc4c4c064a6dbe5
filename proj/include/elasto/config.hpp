#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diagnostics.hpp"
#include "initial_data.hpp"
#include "record.hpp"

namespace elasto {

// Bad configuration or input file: the CLI maps it to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_probes() {
  static const std::vector<std::string> names{"decay", "null_form", "good_derivative", "source_decay"};
  return names;
}

struct RunConfig {
  GridSpec grid{32, 32.0};
  MaterialParams material;
  DataKind kind = DataKind::mixed;
  double amplitude = 0.01;
  double width = 3.0;
  std::string data_file;  // used when kind = file
  double dt = 0.05;
  double T_final = 1.0;
  std::size_t snapshot_stride = 10;
  bool split = true;
  bool phi = true;
  std::vector<std::string> probes;
  int energy_order = 2;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  // Post-processing. Zero means "derive from the run".
  double handoff_fraction = 0.75;
  double radiation_t_A = 0.0;  // default T_final / 2
  double fit_lo = 0.0, fit_hi = 0.0;  // default [L/(8c1), L/(4c1)]
  double rigidity_t1 = 0.0;  // default T_final

  bool operator==(const RunConfig&) const = default;

  std::size_t steps() const { return std::size_t(std::llround(T_final / dt)); }
  double t_A() const { return radiation_t_A > 0.0 ? radiation_t_A : 0.5 * T_final; }
  double window_lo() const { return fit_hi > 0.0 ? fit_lo : grid.box_length / (8.0 * material.c1); }
  double window_hi() const { return fit_hi > 0.0 ? fit_hi : grid.box_length / (4.0 * material.c1); }
  double t1() const { return rigidity_t1 > 0.0 ? rigidity_t1 : T_final; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config: " + key + " expects on/off, got '" + v + "'");
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct ConfigKey {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// One table drives both parsing and serialization, in serialization order.
inline const std::vector<std::pair<std::string, ConfigKey>>& config_keys() {
  using C = RunConfig;
  auto num = [](const char* name, double C::*m) {
    return ConfigKey{[m, name](C& c, const std::string& v) { c.*m = parse_double(name, v); },
                     [m](const C& c) { return format_double(c.*m); }};
  };
  static const std::vector<std::pair<std::string, ConfigKey>> keys = [&] {
    std::vector<std::pair<std::string, ConfigKey>> k;
    k.push_back({"grid.n", {[](C& c, const std::string& v) { c.grid.n = int(parse_int("grid.n", v)); },
                            [](const C& c) { return std::to_string(c.grid.n); }}});
    k.push_back({"grid.L", {[](C& c, const std::string& v) { c.grid.box_length = parse_double("grid.L", v); },
                            [](const C& c) { return format_double(c.grid.box_length); }}});
    k.push_back({"material.c1", {[](C& c, const std::string& v) { c.material.c1 = parse_double("material.c1", v); },
                                 [](const C& c) { return format_double(c.material.c1); }}});
    k.push_back({"material.c2", {[](C& c, const std::string& v) { c.material.c2 = parse_double("material.c2", v); },
                                 [](const C& c) { return format_double(c.material.c2); }}});
    for (int i = 0; i < 5; ++i) {
      const std::string name = "material.d" + std::to_string(i + 1);
      k.push_back({name, {[i, name](C& c, const std::string& v) { c.material.d[i] = parse_double(name, v); },
                          [i](const C& c) { return format_double(c.material.d[i]); }}});
    }
    k.push_back({"initial_data.kind", {[](C& c, const std::string& v) {
                                         try {
                                           c.kind = parse_data_kind(v);
                                         } catch (const std::invalid_argument& e) {
                                           throw ConfigError(std::string("config: ") + e.what());
                                         }
                                       },
                                       [](const C& c) { return std::string(data_kind_name(c.kind)); }}});
    k.push_back({"initial_data.amplitude", num("initial_data.amplitude", &C::amplitude)});
    k.push_back({"initial_data.width", num("initial_data.width", &C::width)});
    k.push_back({"initial_data.file", {[](C& c, const std::string& v) { c.data_file = v; },
                                       [](const C& c) { return c.data_file; }}});
    k.push_back({"time.dt", num("time.dt", &C::dt)});
    k.push_back({"time.T_final", num("time.T_final", &C::T_final)});
    k.push_back({"time.snapshot_stride",
                 {[](C& c, const std::string& v) {
                    const long long s = parse_int("time.snapshot_stride", v);
                    if (s <= 0) throw ConfigError("config: time.snapshot_stride must be positive");
                    c.snapshot_stride = std::size_t(s);
                  },
                  [](const C& c) { return std::to_string(c.snapshot_stride); }}});
    k.push_back({"features.split", {[](C& c, const std::string& v) { c.split = parse_bool("features.split", v); },
                                    [](const C& c) { return std::string(c.split ? "on" : "off"); }}});
    k.push_back({"features.phi", {[](C& c, const std::string& v) { c.phi = parse_bool("features.phi", v); },
                                  [](const C& c) { return std::string(c.phi ? "on" : "off"); }}});
    k.push_back({"features.probes", {[](C& c, const std::string& v) { c.probes = split_list(v); },
                                     [](const C& c) { return join(c.probes); }}});
    k.push_back({"features.energy_order",
                 {[](C& c, const std::string& v) { c.energy_order = int(parse_int("features.energy_order", v)); },
                  [](const C& c) { return std::to_string(c.energy_order); }}});
    k.push_back({"output_dir", {[](C& c, const std::string& v) { c.output_dir = v; },
                                [](const C& c) { return c.output_dir; }}});
    k.push_back({"seed", {[](C& c, const std::string& v) {
                            const long long s = parse_int("seed", v);
                            if (s < 0) throw ConfigError("config: seed must be non-negative");
                            c.seed = std::uint64_t(s);
                          },
                          [](const C& c) { return std::to_string(c.seed); }}});
    k.push_back({"scatter.handoff_fraction", num("scatter.handoff_fraction", &C::handoff_fraction)});
    k.push_back({"scatter.t_A", num("scatter.t_A", &C::radiation_t_A)});
    k.push_back({"scatter.fit_lo", num("scatter.fit_lo", &C::fit_lo)});
    k.push_back({"scatter.fit_hi", num("scatter.fit_hi", &C::fit_hi)});
    k.push_back({"rigidity.t1", num("rigidity.t1", &C::rigidity_t1)});
    return k;
  }();
  return keys;
}

}  // namespace detail

// Flat key=value text; '#' starts a comment. Unknown or repeated keys are errors.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::map<std::string, const detail::ConfigKey*> table;
  for (const auto& [name, key] : detail::config_keys()) table[name] = &key;
  std::map<std::string, int> seen;
  std::stringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (seen.count(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": '" + key + "' already set on line " +
                        std::to_string(seen[key]));
    seen[key] = line_no;
    try {
      it->second->set(base, value);
    } catch (const ConfigError& e) {
      std::string what = e.what();
      if (what.rfind("config: ", 0) == 0) what.erase(0, 8);
      throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
    }
  }
  return base;
}

inline std::string serialize_config(const RunConfig& c) {
  std::string out;
  for (const auto& [name, key] : detail::config_keys()) out += name + "=" + key.get(c) + "\n";
  return out;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// Throws ConfigError on a hard violation; returns warnings otherwise.
inline std::vector<std::string> validate_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  try {
    c.grid.validate();
    c.material.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(c.dt > 0.0) || !(c.T_final > 0.0)) fail("time.dt and time.T_final must be positive");
  const std::size_t steps = c.steps();
  if (steps == 0 || std::abs(double(steps) * c.dt - c.T_final) > 1e-9 * c.T_final)
    fail("time.T_final must be a whole number of steps of time.dt");
  const double h = c.grid.spacing(), dt_max = 0.5 * h / c.material.c1;
  if (c.dt > dt_max * (1.0 + 1e-12))
    fail("CFL violation: dt=" + detail::format_double(c.dt) + " exceeds 0.5*h/c1=" + detail::format_double(dt_max));
  if (!(c.width > 0.0)) fail("initial_data.width must be positive");
  const double reach = 2.0 * (3.0 * c.width + c.material.c1 * c.T_final);
  if (!(c.grid.box_length > reach))
    fail("no-wrap violation: L=" + detail::format_double(c.grid.box_length) + " must exceed 2*(3*width + c1*T_final)=" +
         detail::format_double(reach));
  if (c.kind == DataKind::file && c.data_file.empty()) fail("initial_data.kind=file needs initial_data.file");
  if (c.phi && !c.split) fail("features.phi=on needs features.split=on");
  if (c.split && !c.material.null_condition_holds()) fail("features.split=on needs the null condition d1 = 0");
  if (c.energy_order < 0 || c.energy_order > kMaxEnergyOrder)
    fail("features.energy_order must lie in [0, " + std::to_string(kMaxEnergyOrder) + "]");
  for (const auto& p : c.probes)
    if (std::find(known_probes().begin(), known_probes().end(), p) == known_probes().end())
      fail("unknown probe '" + p + "' (known: " + detail::join(known_probes()) + ")");
  if (std::count(c.probes.begin(), c.probes.end(), "decay") && c.energy_order < 2)
    fail("the decay probes need features.energy_order >= 2");
  if (!(c.handoff_fraction > 0.0 && c.handoff_fraction <= 1.0)) fail("scatter.handoff_fraction must lie in (0, 1]");
  if (c.snapshot_stride == 0) fail("time.snapshot_stride must be positive");

  std::vector<std::string> warnings;
  if (std::abs(c.amplitude) > 0.1)
    warnings.push_back("amplitude " + detail::format_double(c.amplitude) + " exceeds 0.1, beyond the small-data regime");
  return warnings;
}

// Initial data of the configured kind. File data must match the grid; the
// error lists the header fields that disagree.
inline SimState make_initial_data(const RunConfig& c) {
  if (c.kind == DataKind::file) {
    try {
      // The file holds data at t = 0 whatever time its header records.
      const SimState s = read_state_snapshot(c.data_file, &c.grid);
      return make_state(s.u, s.ut);
    } catch (const SnapshotError& e) {
      throw ConfigError(e.what());
    }
  }
  auto [u0, u1] = bump_data(c.grid, c.kind, c.amplitude, c.width);
  return make_state(u0, u1);
}

}  // namespace elasto
