// Command-line driver: evolve, scan, bound-states, pulse-spectrum.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diracwell/commands.hpp"
#include "diracwell/config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> assignments;
  std::string preset;
  std::string out_dir;
  double omega0 = -1.0;
  double b = -1.0;
  long long nz = -1;
  double dt = -1.0;
  long long threads = -1;
  bool literal_ramp = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON config file (a previous meta.json also works)");
    app->add_option("--set", assignments, "Override any config key, KEY=VALUE (repeatable)");
    app->add_option("--preset", preset, "Resolution preset: paper or ci");
    app->add_option("-o,--out", out_dir, "Output directory");
    app->add_option("--omega0", omega0, "Fundamental frequency [c^2]");
    app->add_option("--b", b, "Chirp parameter [c^2/t1]");
    app->add_option("--nz", nz, "Number of lattice points");
    app->add_option("--dt", dt, "Time step [a.u.]");
    app->add_option("--threads", threads, "Worker threads (fallback: DIRACWELL_THREADS)");
    app->add_flag("--literal-eq6", literal_ramp,
                  "Use the literal cos(pi t/2t0) ramp on [0, t0) instead of the turn-on ramp");
  }

  /// File values, then generic --set overrides, then dedicated flags; flags win.
  diracwell::RunConfig resolve() const {
    using diracwell::json;
    json j = json::object();
    if (!config_path.empty()) {
      j = diracwell::load_json_file(config_path);
      if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
    }
    if (const char* env = std::getenv("DIRACWELL_THREADS"); env != nullptr && threads < 0 &&
                                                            !j.contains("threads")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 1) {
        throw diracwell::ConfigError("DIRACWELL_THREADS: expected a positive integer");
      }
      j["threads"] = v;
    }
    for (const auto& text : assignments) {
      auto [key, value] = diracwell::parse_assignment(text);
      j[key] = value;
    }
    if (!preset.empty()) {
      j["preset"] = preset;
      // A preset chosen on the command line replaces the file's resolution.
      if (nz < 0) j.erase("Nz");
      if (dt < 0) j.erase("dt_au");
    }
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    if (omega0 >= 0) j["omega0_c2"] = omega0;
    if (b >= 0) j["b_c2_per_t1"] = b;
    if (nz >= 0) j["Nz"] = nz;
    if (dt >= 0) j["dt_au"] = dt;
    if (threads >= 0) j["threads"] = threads;
    if (literal_ramp) j["ramp"] = "literal";
    return diracwell::RunConfig::from_json(j);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pair creation in a static + chirped oscillating Sauter well (1+1D Dirac)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(DIRACWELL_VERSION));

  CommonFlags evolve_flags;
  auto* evolve = app.add_subcommand("evolve", "Run one evolution; writes N(t), spectrum, density");
  evolve_flags.attach(evolve);

  CommonFlags scan_flags;
  std::string axis1;
  std::string axis2;
  unsigned workers = 0;
  auto* scan = app.add_subcommand("scan", "Parameter scan over omega0_c2 and/or b_c2_per_t1");
  scan_flags.attach(scan);
  scan->add_option("--axis1", axis1, "NAME=START:STOP:STEP or NAME=V1,V2,...");
  scan->add_option("--axis2", axis2, "Optional second axis, same syntax");
  scan->add_option("--workers", workers, "Cells evaluated concurrently");

  CommonFlags bound_flags;
  auto* bound = app.add_subcommand("bound-states", "Discrete levels of the static well");
  bound_flags.attach(bound);

  CommonFlags pulse_flags;
  auto* pulse = app.add_subcommand("pulse-spectrum", "Frequency spectrum of the chirped drive");
  pulse_flags.attach(pulse);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (evolve->parsed()) {
      const auto cfg = evolve_flags.resolve();
      const auto summary = diracwell::cmd_evolve(cfg);
      std::cout << "N_final = " << diracwell::format_number(summary.number_final)
                << "  (unitarity error " << summary.worst_unitarity_error << ", "
                << summary.wall_time_s << " s)\n"
                << "outputs in " << summary.out_dir.string() << "\n";
    } else if (scan->parsed()) {
      auto cfg = scan_flags.resolve();
      if (!axis1.empty()) {
        diracwell::ScanSettings s = cfg.scan.value_or(diracwell::ScanSettings{});
        s.axis1 = diracwell::parse_axis(axis1);
        if (!axis2.empty()) s.axis2 = diracwell::parse_axis(axis2);
        cfg.scan = s;
      } else if (!axis2.empty()) {
        throw diracwell::ConfigError("--axis2 requires --axis1");
      }
      if (!cfg.scan) throw diracwell::ConfigError("scan: give --axis1 or a 'scan' config block");
      if (workers > 0) cfg.scan->workers = workers;
      const auto result = diracwell::cmd_scan(cfg);
      std::size_t failed = 0;
      for (const auto& c : result.cells) failed += c.status == diracwell::CellStatus::failed;
      std::cout << result.cells.size() << " cells, " << failed << " failed; scan.csv in "
                << cfg.out_dir << "\n";
      if (failed > 0) return kExitNumerical;
    } else if (bound->parsed()) {
      const auto cfg = bound_flags.resolve();
      diracwell::cmd_bound_states(cfg, std::cout);
    } else if (pulse->parsed()) {
      const auto cfg = pulse_flags.resolve();
      diracwell::cmd_pulse_spectrum(cfg);
      std::cout << "pulse_spectrum.csv in " << cfg.out_dir << "\n";
    }
  } catch (const diracwell::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const diracwell::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
