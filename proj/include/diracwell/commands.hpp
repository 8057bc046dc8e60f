#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diracwell/config.hpp"
#include "diracwell/errors.hpp"
#include "diracwell/grid.hpp"
#include "diracwell/observables.hpp"
#include "diracwell/potential.hpp"
#include "diracwell/propagator.hpp"
#include "diracwell/sweep.hpp"

#ifndef DIRACWELL_VERSION
#define DIRACWELL_VERSION "unknown"
#endif

namespace diracwell {

namespace fs = std::filesystem;

/// Shortest round-trip decimal form of a double.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Collects output files under temporary names and publishes them together.
/// Files not committed are removed when the set goes out of scope, so a failed
/// command leaves no partial outputs behind.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("out_dir: cannot create '" + dir_.string() + "': " + ec.message());
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& name : names_) fs::remove(staged(name), ec);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(staged(name), std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("out_dir: cannot write '" + staged(name).string() + "'");
    out << content;
    out.close();
    if (!out) throw ConfigError("out_dir: failed writing '" + staged(name).string() + "'");
    names_.push_back(name);
  }

  void commit() {
    for (const auto& name : names_) fs::rename(staged(name), dir_ / name);
    committed_ = true;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path staged(const std::string& name) const { return dir_ / (name + ".partial"); }

  fs::path dir_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

/// CSV text with a header row; all fields here are numeric or bare words.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    add_row(header);
  }
  template <typename... Fields>
  void row(const Fields&... fields) {
    static_assert(sizeof...(Fields) > 0);
    std::vector<std::string> cells{to_field(fields)...};
    if (cells.size() != columns_) throw std::logic_error("CsvTable: column count mismatch");
    add_row(cells);
  }
  const std::string& str() const { return text_; }

 private:
  static std::string to_field(double v) { return format_number(v); }
  static std::string to_field(std::size_t v) { return std::to_string(v); }
  static std::string to_field(const std::string& v) { return quote(v); }
  static std::string to_field(const char* v) { return quote(v); }

  static std::string quote(const std::string& v) {
    if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char ch : v) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  }
  void add_row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) text_ += ',';
      text_ += cells[k];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

/// Converted quantities recorded alongside every run.
inline json derived_quantities(const RunConfig& cfg) {
  const PotentialConfig pot = cfg.potential();
  json d = {
      {"V1_au", pot.static_depth},
      {"V2_au", pot.oscillating_depth},
      {"W_au", pot.edge_width},
      {"D_au", pot.well_width},
      {"omega0_au", pot.omega0},
      {"b_au", pot.chirp},
      {"t0_au", pot.ramp_time},
      {"t1_au", pot.interaction_time},
      {"t_total_au", pot.duration()},
      {"center_au", pot.center},
      {"omega_eff_c2", pot.effective_frequency() / kRestEnergy},
      {"omega_final_c2", pot.final_frequency() / kRestEnergy},
      {"c_au", kSpeedOfLight},
  };
  return d;
}

inline json run_meta(const RunConfig& cfg, const std::string& command) {
  return {{"command", command},
          {"version", DIRACWELL_VERSION},
          {"config", cfg.to_json()},
          {"config_hash", physics_hash(cfg)},
          {"derived", derived_quantities(cfg)}};
}

struct EvolveSummary {
  double number_final = 0.0;
  double worst_unitarity_error = 0.0;
  double wall_time_s = 0.0;
  fs::path out_dir;
};

/// One full evolution: number_vs_time.csv (t_au,N), spectrum.csv (E_c2,dN_dE),
/// density.csv (z_au,rho) and meta.json.
inline EvolveSummary cmd_evolve(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const PotentialConfig pot = cfg.potential();
  const Grid grid = cfg.grid();
  const EvolutionSchedule schedule = cfg.schedule();
  OutputSet out(cfg.out_dir);

  const FreeBasis basis(grid);
  EvolveOptions opts;
  opts.threads = cfg.threads;
  const EvolutionResult result = evolve_basis(grid, basis, pot, schedule, opts);

  EvolveSummary summary;
  summary.number_final = number_of_electrons(result.matrix);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    summary.worst_unitarity_error =
        std::max(summary.worst_unitarity_error, std::abs(result.matrix.column_norm(n) - 1.0));
  }
  if (!std::isfinite(summary.number_final) || summary.worst_unitarity_error > 1e-6) {
    throw NumericalError("evolve: evolution lost unitarity (worst column error " +
                         format_number(summary.worst_unitarity_error) + ")");
  }

  CsvTable number({"t_au", "N"});
  for (std::size_t m = 0; m < result.times.size(); ++m) number.row(result.times[m], result.number[m]);
  out.write("number_vs_time.csv", number.str());

  const EnergySpectrum spectrum = energy_spectrum(result.matrix, basis, cfg.bin_width_c2);
  CsvTable spec({"E_c2", "dN_dE"});
  for (std::size_t b = 0; b < spectrum.size(); ++b) spec.row(spectrum.center(b), spectrum.counts[b]);
  out.write("spectrum.csv", spec.str());

  const std::vector<double> rho = density(result.matrix, grid, basis);
  CsvTable dens({"z_au", "rho"});
  for (std::size_t j = 0; j < grid.size(); ++j) dens.row(grid.position(j), rho[j]);
  out.write("density.csv", dens.str());

  summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json meta = run_meta(cfg, "evolve");
  meta["derived"]["dt_effective_au"] = schedule.dt;
  meta["derived"]["steps"] = schedule.steps;
  meta["derived"]["max_abs_p_over_c"] = grid.max_abs_momentum() / kSpeedOfLight;
  meta["N_final"] = summary.number_final;
  meta["unitarity_error"] = summary.worst_unitarity_error;
  meta["wall_time_s"] = summary.wall_time_s;
  out.write("meta.json", meta.dump(2) + "\n");
  out.commit();
  summary.out_dir = cfg.out_dir;
  return summary;
}

/// The sweep spec described by cfg.scan.
inline SweepSpec sweep_spec(const RunConfig& cfg) {
  if (!cfg.scan) throw ConfigError("scan: no scan axes configured");
  SweepSpec spec;
  spec.axis1 = cfg.scan->axis1;
  spec.axis2 = cfg.scan->axis2;
  spec.base = cfg;
  spec.base.scan.reset();
  return spec;
}

inline std::string scan_csv(const SweepResult& result) {
  CsvTable table({"omega0_c2", "b_c2_per_t1", "N", "status", "runtime_s"});
  for (const auto& c : result.cells) {
    table.row(c.omega0_c2, c.b_c2_per_t1, c.number, std::string(status_name(c.status)),
              c.runtime_s);
  }
  return table.str();
}

struct ScanOptions {
  std::size_t max_new_cells = std::numeric_limits<std::size_t>::max();
  CellEvaluator evaluator = evaluate_number;
};

/// Parameter scan: scan.csv (one row per cell) plus the append-only checkpoint.
/// scan.csv is only written once every cell is done; an interrupted scan leaves
/// just the checkpoint, from which the next invocation resumes.
inline SweepResult cmd_scan(const RunConfig& cfg, const ScanOptions& scan_options = {}) {
  const SweepSpec spec = sweep_spec(cfg);
  OutputSet out(cfg.out_dir);
  SweepOptions opts;
  opts.workers = cfg.scan->workers;
  opts.threads_per_cell = std::max(1u, cfg.threads / std::max(1u, cfg.scan->workers));
  opts.checkpoint = fs::path(cfg.out_dir) / cfg.scan->checkpoint;
  opts.max_new_cells = scan_options.max_new_cells;
  opts.evaluator = scan_options.evaluator;
  SweepResult result = run_sweep(spec, opts);
  if (!result.complete()) return result;

  out.write("scan.csv", scan_csv(result));
  json meta = run_meta(cfg, "scan");
  meta["scan_hash"] = spec.hash();
  meta["cells"] = result.cells.size();
  std::size_t failed = 0;
  for (const auto& c : result.cells) failed += c.status == CellStatus::failed;
  meta["failed_cells"] = failed;
  out.write("scan_meta.json", meta.dump(2) + "\n");
  out.commit();
  return result;
}

/// Bound levels: bound_states.csv (level,E_c2,localization) and a table on `log`.
inline BoundStateSet cmd_bound_states(const RunConfig& cfg, std::ostream& log) {
  const PotentialConfig pot = cfg.potential();
  const Grid grid = cfg.bound_grid();
  OutputSet out(cfg.out_dir);
  BoundStateOptions opts;
  opts.depth = cfg.bound_depth;
  opts.localization_threshold = cfg.bound_localization;
  const BoundStateSet levels = bound_states(grid, pot, opts);

  CsvTable table({"level", "E_c2", "localization"});
  log << "level  E [c^2]      localization\n";
  for (std::size_t i = 0; i < levels.energies_c2.size(); ++i) {
    table.row(i + 1, levels.energies_c2[i], levels.localization[i]);
    log << std::setw(5) << i + 1 << "  " << std::setw(11) << std::fixed << std::setprecision(6)
        << levels.energies_c2[i] << "  " << std::setprecision(4) << levels.localization[i] << '\n';
  }
  log << levels.energies_c2.size() << " bound level(s), Nz = " << grid.size() << ", depth "
      << detail::depth_name(cfg.bound_depth) << '\n';
  log.unsetf(std::ios::floatfield);
  out.write("bound_states.csv", table.str());
  json meta = run_meta(cfg, "bound-states");
  meta["levels"] = levels.energies_c2;
  out.write("bound_states_meta.json", meta.dump(2) + "\n");
  out.commit();
  return levels;
}

/// Pulse spectrum: pulse_spectrum.csv (omega_c2,magnitude).
inline PulseSpectrum cmd_pulse_spectrum(const RunConfig& cfg) {
  const PotentialConfig pot = cfg.potential();
  OutputSet out(cfg.out_dir);
  const PulseSpectrum spectrum = pulse_spectrum(pot, cfg.pulse_samples, cfg.pulse_window);
  CsvTable table({"omega_c2", "magnitude"});
  for (std::size_t k = 0; k < spectrum.frequencies_c2.size(); ++k) {
    table.row(spectrum.frequencies_c2[k], spectrum.magnitudes[k]);
  }
  out.write("pulse_spectrum.csv", table.str());
  out.commit();
  return spectrum;
}

}  // namespace diracwell
