#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diracwell/config.hpp"
#include "diracwell/errors.hpp"
#include "diracwell/grid.hpp"
#include "diracwell/observables.hpp"
#include "diracwell/propagator.hpp"

namespace diracwell {

struct SweepSpec {
  SweepAxis axis1;
  std::optional<SweepAxis> axis2;
  RunConfig base;

  std::size_t rows() const { return axis1.values.size(); }
  std::size_t cols() const { return axis2 ? axis2->values.size() : 1; }

  void validate() const {
    auto check = [](const SweepAxis& a, const char* which) {
      if (a.values.empty()) throw ConfigError(std::string(which) + ": axis is empty");
      if (a.name != "omega0_c2" && a.name != "b_c2_per_t1") {
        throw ConfigError(std::string(which) + ".name: unsupported axis '" + a.name + "'");
      }
      for (double v : a.values) {
        if (!std::isfinite(v)) throw ConfigError(std::string(which) + ": non-finite value");
      }
    };
    check(axis1, "scan.axis1");
    if (axis2) {
      check(*axis2, "scan.axis2");
      if (axis2->name == axis1.name) {
        throw ConfigError("scan.axis2: must differ from axis1");
      }
    }
    if (rows() * cols() > kMaxSweepCells) {
      throw ConfigError("scan: " + std::to_string(rows() * cols()) + " cells exceed the budget of " +
                        std::to_string(kMaxSweepCells));
    }
  }

  /// Base config with the cell's axis values applied.
  RunConfig cell_config(std::size_t i, std::size_t j) const {
    RunConfig cfg = base;
    cfg.scan.reset();
    auto apply = [&](const SweepAxis& a, double v) {
      if (a.name == "omega0_c2") cfg.omega0_c2 = v;
      else cfg.b_c2_per_t1 = v;
    };
    apply(axis1, axis1.values[i]);
    if (axis2) apply(*axis2, axis2->values[j]);
    return cfg;
  }

  /// Fingerprint of the base physics plus both axes.
  std::string hash() const {
    json j = {{"base", physics_hash(base)}, {"axis1", detail::axis_to_json(axis1)}};
    if (axis2) j["axis2"] = detail::axis_to_json(*axis2);
    return hex64(fnv1a(j.dump()));
  }
};

enum class CellStatus { pending, ok, failed };

inline const char* status_name(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::failed: return "failed";
    default: return "pending";
  }
}

struct SweepCell {
  std::size_t i = 0;
  std::size_t j = 0;
  double omega0_c2 = 0.0;
  double b_c2_per_t1 = 0.0;
  double number = std::numeric_limits<double>::quiet_NaN();
  CellStatus status = CellStatus::pending;
  double runtime_s = 0.0;
  std::string message;
};

struct SweepResult {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<SweepCell> cells;  ///< row-major over (axis1, axis2)

  const SweepCell& at(std::size_t i, std::size_t j) const { return cells[i * cols + j]; }
  bool complete() const {
    return std::none_of(cells.begin(), cells.end(),
                        [](const SweepCell& c) { return c.status == CellStatus::pending; });
  }
};

/// N_final for one configuration.
using CellEvaluator = std::function<double(const RunConfig&, unsigned threads)>;

inline double evaluate_number(const RunConfig& cfg, unsigned threads) {
  const Grid grid = cfg.grid();
  const FreeBasis basis(grid);
  EvolveOptions opts;
  opts.threads = threads;
  const auto result = evolve_basis(grid, basis, cfg.potential(), cfg.schedule(), opts);
  return number_of_electrons(result.matrix);
}

struct SweepOptions {
  unsigned workers = 1;
  unsigned threads_per_cell = 1;
  /// Append-only newline-delimited JSON; empty disables checkpointing.
  std::filesystem::path checkpoint;
  /// Stop after this many newly evaluated cells (emulates an interrupted run).
  std::size_t max_new_cells = std::numeric_limits<std::size_t>::max();
  CellEvaluator evaluator = evaluate_number;
};

namespace detail {

inline json cell_record(const SweepCell& c, const std::string& hash) {
  json j = {{"i", c.i},
            {"j", c.j},
            {"omega0_c2", c.omega0_c2},
            {"b_c2_per_t1", c.b_c2_per_t1},
            {"status", status_name(c.status)},
            {"runtime_s", c.runtime_s},
            {"preset_hash", hash}};
  j["N"] = std::isfinite(c.number) ? json(c.number) : json(nullptr);
  if (!c.message.empty()) j["message"] = c.message;
  return j;
}

/// Reads completed cells from a checkpoint. A truncated final line (from a
/// killed writer) is ignored; any other malformed line is an error.
inline std::map<std::pair<std::size_t, std::size_t>, SweepCell> read_checkpoint(
    const std::filesystem::path& path, const std::string& hash) {
  std::map<std::pair<std::size_t, std::size_t>, SweepCell> done;
  std::ifstream in(path);
  if (!in) return done;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const json rec = json::parse(lines[k], nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      if (k + 1 == lines.size()) break;
      throw ConfigError("checkpoint: malformed record on line " + std::to_string(k + 1) + " of " +
                        path.string());
    }
    if (rec.value("preset_hash", std::string()) != hash) {
      throw ConfigError("checkpoint: " + path.string() +
                        " was written for a different configuration; remove it or choose "
                        "another checkpoint path");
    }
    SweepCell c;
    c.i = rec.at("i").get<std::size_t>();
    c.j = rec.at("j").get<std::size_t>();
    c.omega0_c2 = rec.at("omega0_c2").get<double>();
    c.b_c2_per_t1 = rec.at("b_c2_per_t1").get<double>();
    c.runtime_s = rec.at("runtime_s").get<double>();
    const auto st = rec.at("status").get<std::string>();
    c.status = st == "ok" ? CellStatus::ok : CellStatus::failed;
    if (rec.at("N").is_number()) c.number = rec.at("N").get<double>();
    c.message = rec.value("message", std::string());
    done[{c.i, c.j}] = c;
  }
  return done;
}

/// Drops a partial last record left by an interrupted writer so that new
/// records start on a fresh line.
inline void repair_checkpoint(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return;
  std::string text;
  {
    std::ifstream in(path, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  if (text.empty() || text.back() == '\n') return;
  const auto cut = text.find_last_of('\n');
  const std::size_t start = cut == std::string::npos ? 0 : cut + 1;
  const json tail = json::parse(text.substr(start), nullptr, false);
  if (!tail.is_discarded() && tail.is_object()) {
    std::ofstream(path, std::ios::app) << '\n';
  } else {
    std::filesystem::resize_file(path, start);
  }
}

}  // namespace detail

/// Evaluates N_final on every cell of a 1D or 2D grid. Cells run on a bounded
/// worker pool; each completed cell is appended to the checkpoint by a single
/// writer, and cells already present in the checkpoint are not recomputed.
/// Per-cell failures are recorded and the sweep continues.
inline SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {}) {
  spec.validate();
  const std::string hash = spec.hash();

  SweepResult result;
  result.rows = spec.rows();
  result.cols = spec.cols();
  result.cells.resize(result.rows * result.cols);
  for (std::size_t i = 0; i < result.rows; ++i) {
    for (std::size_t j = 0; j < result.cols; ++j) {
      auto& c = result.cells[i * result.cols + j];
      const RunConfig cfg = spec.cell_config(i, j);
      c.i = i;
      c.j = j;
      c.omega0_c2 = cfg.omega0_c2;
      c.b_c2_per_t1 = cfg.b_c2_per_t1;
    }
  }

  if (!options.checkpoint.empty()) {
    detail::repair_checkpoint(options.checkpoint);
    for (const auto& [key, cell] : detail::read_checkpoint(options.checkpoint, hash)) {
      if (key.first >= result.rows || key.second >= result.cols) {
        throw ConfigError("checkpoint: cell index outside the sweep grid");
      }
      result.cells[key.first * result.cols + key.second] = cell;
    }
  }

  std::vector<std::size_t> todo;
  for (std::size_t idx = 0; idx < result.cells.size(); ++idx) {
    if (result.cells[idx].status == CellStatus::pending) todo.push_back(idx);
  }
  if (todo.size() > options.max_new_cells) todo.resize(options.max_new_cells);

  std::ofstream sink;
  if (!options.checkpoint.empty()) {
    sink.open(options.checkpoint, std::ios::app);
    if (!sink) throw ConfigError("checkpoint: cannot open " + options.checkpoint.string());
  }
  std::mutex sink_mutex;

  auto evaluate = [&](std::size_t idx) {
    SweepCell& c = result.cells[idx];
    const auto start = std::chrono::steady_clock::now();
    try {
      const double n = options.evaluator(spec.cell_config(c.i, c.j), options.threads_per_cell);
      if (!std::isfinite(n)) throw NumericalError("non-finite particle number");
      c.number = n;
      c.status = CellStatus::ok;
    } catch (const std::exception& e) {
      c.number = std::numeric_limits<double>::quiet_NaN();
      c.status = CellStatus::failed;
      c.message = e.what();
    }
    c.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (sink.is_open()) {
      std::lock_guard lock(sink_mutex);
      sink << detail::cell_record(c, hash).dump() << '\n';
      sink.flush();
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(todo.size())));
  if (workers <= 1) {
    for (std::size_t idx : todo) evaluate(idx);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < todo.size(); k = next++) evaluate(todo[k]);
      });
    }
  }
  return result;
}

struct PeakReport {
  std::vector<std::size_t> indices;
  std::vector<double> positions;
  /// Mean distance between adjacent peaks; NaN with fewer than two peaks.
  double mean_spacing = std::numeric_limits<double>::quiet_NaN();
};

/// Interior local maxima (strictly greater than both neighbours) of a series
/// sampled on a uniform axis.
inline PeakReport find_peaks(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("find_peaks: x and y lengths differ");
  if (x.size() < 5) throw ConfigError("find_peaks: need at least 5 points");
  const double step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  if (!(std::abs(step) > 0.0)) throw ConfigError("find_peaks: degenerate axis");
  for (std::size_t k = 1; k < x.size(); ++k) {
    if (std::abs((x[k] - x[k - 1]) - step) > 1e-6 * std::abs(step)) {
      throw ConfigError("find_peaks: axis is not uniformly spaced");
    }
  }
  PeakReport report;
  for (std::size_t k = 1; k + 1 < y.size(); ++k) {
    if (y[k] > y[k - 1] && y[k] > y[k + 1]) {
      report.indices.push_back(k);
      report.positions.push_back(x[k]);
    }
  }
  if (report.positions.size() >= 2) {
    report.mean_spacing = (report.positions.back() - report.positions.front()) /
                          static_cast<double>(report.positions.size() - 1);
  }
  return report;
}

}  // namespace diracwell
