#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diracwell/errors.hpp"
#include "diracwell/grid.hpp"
#include "diracwell/observables.hpp"
#include "diracwell/potential.hpp"
#include "diracwell/propagator.hpp"

namespace diracwell {

using json = nlohmann::json;

/// Resolution presets. `paper` is the production setting; `ci` is sized for
/// test runs of a few seconds per evolution.
struct Preset {
  const char* name;
  std::size_t points;
  double dt_au;
};

inline constexpr Preset kPaperPreset{"paper", 2048, 1e-6};
inline constexpr Preset kCiPreset{"ci", 512, 5e-6};

inline const Preset& preset_by_name(const std::string& name) {
  if (name == kPaperPreset.name) return kPaperPreset;
  if (name == kCiPreset.name) return kCiPreset;
  throw ConfigError("preset: unknown preset '" + name + "' (expected 'paper' or 'ci')");
}

/// One scan axis; `name` is omega0_c2 or b_c2_per_t1.
struct SweepAxis {
  std::string name;
  std::vector<double> values;

  /// start + i*step for i = 0..round((stop - start)/step).
  static SweepAxis range(std::string name, double start, double stop, double step) {
    if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start) {
      throw ConfigError("scan." + name + ": need finite start <= stop and step > 0");
    }
    const auto count = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
    SweepAxis axis{std::move(name), {}};
    axis.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      axis.values.push_back(start + static_cast<double>(i) * step);
    }
    return axis;
  }
};

inline constexpr std::size_t kMaxSweepCells = 10000;

struct ScanSettings {
  SweepAxis axis1;
  std::optional<SweepAxis> axis2;
  unsigned workers = 1;
  std::string checkpoint = "scan.checkpoint.jsonl";
};

/// Everything a command needs. Physical quantities use the reporting units
/// named in their keys; conversion to atomic units happens in potential(),
/// grid() and schedule().
struct RunConfig {
  std::string preset = kPaperPreset.name;
  double length_au = 2.0;
  std::size_t points = kPaperPreset.points;
  double dt_au = kPaperPreset.dt_au;
  std::size_t checkpoint_stride = 10;

  double v1_c2 = 1.5;
  double v2_c2 = 1.5;
  double w_lambda = 0.3;
  double d_lambda = 10.0;
  double omega0_c2 = 0.5;
  double b_c2_per_t1 = 0.42;
  double phi_rad = 0.0;
  double t0_inv_c2 = 5.0;
  double t1_inv_c2 = 20.0 * kPi;
  double center_lambda = 0.0;
  RampConvention ramp = RampConvention::turn_on;

  double bin_width_c2 = 0.02;
  std::size_t pulse_samples = 4096;
  SpectrumWindow pulse_window = SpectrumWindow::rectangular;
  std::size_t bound_points = 1024;
  BoundWellDepth bound_depth = BoundWellDepth::static_only;
  double bound_localization = 0.5;

  unsigned threads = 1;
  std::string out_dir = "out";
  std::optional<ScanSettings> scan;

  PotentialConfig potential() const {
    PotentialConfig cfg;
    cfg.static_depth = v1_c2 * kRestEnergy;
    cfg.oscillating_depth = v2_c2 * kRestEnergy;
    cfg.edge_width = w_lambda * kComptonLength;
    cfg.well_width = d_lambda * kComptonLength;
    cfg.ramp_time = t0_inv_c2 / kRestEnergy;
    cfg.interaction_time = t1_inv_c2 / kRestEnergy;
    cfg.omega0 = omega0_c2 * kRestEnergy;
    cfg.chirp = b_c2_per_t1 * kRestEnergy / cfg.interaction_time;
    cfg.phase = phi_rad;
    cfg.center = center_lambda * kComptonLength;
    cfg.ramp = ramp;
    cfg.validate();
    return cfg;
  }

  Grid grid() const { return Grid::build(length_au, points); }
  Grid bound_grid() const { return Grid::build(length_au, bound_points); }

  EvolutionSchedule schedule() const {
    return EvolutionSchedule::covering(potential(), dt_au, checkpoint_stride);
  }

  /// Canonical serialization; reading it back yields an identical config.
  json to_json() const;
  static RunConfig from_json(const json& j);
};

namespace detail {

inline const char* ramp_name(RampConvention r) {
  return r == RampConvention::turn_on ? "turn_on" : "literal";
}
inline const char* window_name(SpectrumWindow w) {
  return w == SpectrumWindow::rectangular ? "rectangular" : "hann";
}
inline const char* depth_name(BoundWellDepth d) {
  return d == BoundWellDepth::static_only ? "static" : "combined";
}

inline json axis_to_json(const SweepAxis& a) { return {{"name", a.name}, {"values", a.values}}; }

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key + ": wrong type (got " + std::string(j.type_name()) + ")");
  }
}

inline double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) {
    throw ConfigError(key + ": expected a number (got " + std::string(j.type_name()) + ")");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(key + ": must be finite");
  return v;
}

inline std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(key + ": expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

inline SweepAxis axis_from_json(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key + ": expected an object");
  if (!j.contains("name")) throw ConfigError(key + ".name: missing");
  SweepAxis axis;
  axis.name = get_as<std::string>(j.at("name"), key + ".name");
  if (axis.name != "omega0_c2" && axis.name != "b_c2_per_t1") {
    throw ConfigError(key + ".name: unsupported axis '" + axis.name +
                      "' (expected omega0_c2 or b_c2_per_t1)");
  }
  for (const auto& [k, v] : j.items()) {
    if (k != "name" && k != "values" && k != "start" && k != "stop" && k != "step") {
      throw ConfigError(key + "." + k + ": unknown key");
    }
  }
  if (j.contains("values")) {
    if (!j.at("values").is_array()) throw ConfigError(key + ".values: expected an array");
    for (const auto& v : j.at("values")) axis.values.push_back(get_number(v, key + ".values"));
  } else if (j.contains("start") && j.contains("stop") && j.contains("step")) {
    axis = SweepAxis::range(axis.name, get_number(j.at("start"), key + ".start"),
                            get_number(j.at("stop"), key + ".stop"),
                            get_number(j.at("step"), key + ".step"));
  } else {
    throw ConfigError(key + ": give either values or start/stop/step");
  }
  if (axis.values.empty()) throw ConfigError(key + ".values: axis is empty");
  return axis;
}

}  // namespace detail

inline json RunConfig::to_json() const {
  json j = {
      {"preset", preset},
      {"L_au", length_au},
      {"Nz", points},
      {"dt_au", dt_au},
      {"checkpoint_stride", checkpoint_stride},
      {"V1_c2", v1_c2},
      {"V2_c2", v2_c2},
      {"W_lambda", w_lambda},
      {"D_lambda", d_lambda},
      {"omega0_c2", omega0_c2},
      {"b_c2_per_t1", b_c2_per_t1},
      {"phi_rad", phi_rad},
      {"t0_inv_c2", t0_inv_c2},
      {"t1_inv_c2", t1_inv_c2},
      {"center_lambda", center_lambda},
      {"ramp", detail::ramp_name(ramp)},
      {"bin_width_c2", bin_width_c2},
      {"pulse_samples", pulse_samples},
      {"pulse_window", detail::window_name(pulse_window)},
      {"bound_Nz", bound_points},
      {"bound_depth", detail::depth_name(bound_depth)},
      {"bound_localization", bound_localization},
      {"threads", threads},
      {"out_dir", out_dir},
  };
  if (scan) {
    json s = {{"axis1", detail::axis_to_json(scan->axis1)},
              {"workers", scan->workers},
              {"checkpoint", scan->checkpoint}};
    if (scan->axis2) s["axis2"] = detail::axis_to_json(*scan->axis2);
    j["scan"] = std::move(s);
  }
  return j;
}

inline RunConfig RunConfig::from_json(const json& input) {
  if (!input.is_object()) throw ConfigError("config: top level must be an object");
  // A meta.json written by a previous run carries its config under "config".
  const json& j = input.contains("config") && input.at("config").is_object() ? input.at("config")
                                                                              : input;
  RunConfig cfg;
  if (j.contains("preset")) {
    cfg.preset = detail::get_as<std::string>(j.at("preset"), "preset");
    const Preset& p = preset_by_name(cfg.preset);
    cfg.points = p.points;
    cfg.dt_au = p.dt_au;
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    if (key == "L_au") cfg.length_au = detail::get_number(value, key);
    else if (key == "Nz") cfg.points = detail::get_count(value, key);
    else if (key == "dt_au") cfg.dt_au = detail::get_number(value, key);
    else if (key == "checkpoint_stride") cfg.checkpoint_stride = detail::get_count(value, key);
    else if (key == "V1_c2") cfg.v1_c2 = detail::get_number(value, key);
    else if (key == "V2_c2") cfg.v2_c2 = detail::get_number(value, key);
    else if (key == "W_lambda") cfg.w_lambda = detail::get_number(value, key);
    else if (key == "D_lambda") cfg.d_lambda = detail::get_number(value, key);
    else if (key == "omega0_c2") cfg.omega0_c2 = detail::get_number(value, key);
    else if (key == "b_c2_per_t1") cfg.b_c2_per_t1 = detail::get_number(value, key);
    else if (key == "phi_rad") cfg.phi_rad = detail::get_number(value, key);
    else if (key == "t0_inv_c2") cfg.t0_inv_c2 = detail::get_number(value, key);
    else if (key == "t1_inv_c2") cfg.t1_inv_c2 = detail::get_number(value, key);
    else if (key == "center_lambda") cfg.center_lambda = detail::get_number(value, key);
    else if (key == "ramp") {
      const auto s = detail::get_as<std::string>(value, key);
      if (s == "turn_on") cfg.ramp = RampConvention::turn_on;
      else if (s == "literal") cfg.ramp = RampConvention::literal;
      else throw ConfigError("ramp: expected 'turn_on' or 'literal' (got '" + s + "')");
    } else if (key == "bin_width_c2") cfg.bin_width_c2 = detail::get_number(value, key);
    else if (key == "pulse_samples") cfg.pulse_samples = detail::get_count(value, key);
    else if (key == "pulse_window") {
      const auto s = detail::get_as<std::string>(value, key);
      if (s == "rectangular") cfg.pulse_window = SpectrumWindow::rectangular;
      else if (s == "hann") cfg.pulse_window = SpectrumWindow::hann;
      else throw ConfigError("pulse_window: expected 'rectangular' or 'hann' (got '" + s + "')");
    } else if (key == "bound_Nz") cfg.bound_points = detail::get_count(value, key);
    else if (key == "bound_depth") {
      const auto s = detail::get_as<std::string>(value, key);
      if (s == "static") cfg.bound_depth = BoundWellDepth::static_only;
      else if (s == "combined") cfg.bound_depth = BoundWellDepth::combined;
      else throw ConfigError("bound_depth: expected 'static' or 'combined' (got '" + s + "')");
    } else if (key == "bound_localization") cfg.bound_localization = detail::get_number(value, key);
    else if (key == "threads") {
      const auto t = detail::get_count(value, key);
      if (t == 0) throw ConfigError("threads: must be at least 1");
      cfg.threads = static_cast<unsigned>(t);
    } else if (key == "out_dir") cfg.out_dir = detail::get_as<std::string>(value, key);
    else if (key == "scan") {
      if (!value.is_object()) throw ConfigError("scan: expected an object");
      ScanSettings s;
      bool have_axis1 = false;
      for (const auto& [k, v] : value.items()) {
        const std::string full = "scan." + k;
        if (k == "axis1") {
          s.axis1 = detail::axis_from_json(v, full);
          have_axis1 = true;
        } else if (k == "axis2") {
          s.axis2 = detail::axis_from_json(v, full);
        } else if (k == "workers") {
          const auto w = detail::get_count(v, full);
          if (w == 0) throw ConfigError("scan.workers: must be at least 1");
          s.workers = static_cast<unsigned>(w);
        } else if (k == "checkpoint") {
          s.checkpoint = detail::get_as<std::string>(v, full);
        } else {
          throw ConfigError(full + ": unknown key");
        }
      }
      if (!have_axis1) throw ConfigError("scan.axis1: missing");
      cfg.scan = std::move(s);
    } else {
      throw ConfigError(key + ": unknown configuration key");
    }
  }
  if (!(cfg.bin_width_c2 > 0.0)) throw ConfigError("bin_width_c2: must be positive");
  if (!(cfg.bound_localization >= 0.0 && cfg.bound_localization < 1.0)) {
    throw ConfigError("bound_localization: must lie in [0, 1)");
  }
  return cfg;
}

/// Parses a flag value "KEY=VALUE". VALUE is read as JSON when it parses,
/// otherwise as a plain string, so `omega0_c2=1.0` and `ramp=literal` both work.
inline std::pair<std::string, json> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set: expected KEY=VALUE (got '" + text + "')");
  }
  std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {std::move(key), std::move(value)};
}

/// Parses "name=start:stop:step" or "name=v1,v2,...".
inline SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("axis: expected NAME=START:STOP:STEP or NAME=V1,V2,... (got '" + text + "')");
  }
  json spec = {{"name", text.substr(0, eq)}};
  const std::string body = text.substr(eq + 1);
  auto to_number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
      throw ConfigError("axis: '" + s + "' is not a number");
    }
    return v;
  };
  std::vector<std::string> parts;
  char sep = body.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  if (sep == ':') {
    if (parts.size() != 3) throw ConfigError("axis: range needs START:STOP:STEP");
    spec["start"] = to_number(parts[0]);
    spec["stop"] = to_number(parts[1]);
    spec["step"] = to_number(parts[2]);
  } else {
    json values = json::array();
    for (const auto& p : parts) values.push_back(to_number(p));
    spec["values"] = values;
  }
  return detail::axis_from_json(spec, "axis");
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: '" + path + "' is not valid JSON");
  return j;
}

/// 64-bit FNV-1a, used to fingerprint resolved configurations.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

/// Fingerprint of everything that affects N_final (threads and paths excluded).
inline std::string physics_hash(const RunConfig& cfg) {
  json j = cfg.to_json();
  j.erase("threads");
  j.erase("out_dir");
  j.erase("scan");
  return hex64(fnv1a(j.dump()));
}

}  // namespace diracwell
