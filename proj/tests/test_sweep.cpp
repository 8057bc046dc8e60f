#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "diracwell/sweep.hpp"

using namespace diracwell;
namespace fs = std::filesystem;

namespace {

/// Cheap deterministic stand-in for a full evolution.
double fake_number(const RunConfig& cfg, unsigned) {
  return 1.0 + std::sin(3.0 * cfg.omega0_c2) + 0.25 * cfg.b_c2_per_t1 * cfg.b_c2_per_t1;
}

SweepSpec grid_spec() {
  SweepSpec spec;
  spec.axis1 = SweepAxis::range("omega0_c2", 0.1, 1.0, 0.1);
  spec.axis2 = SweepAxis::range("b_c2_per_t1", 0.0, 0.6, 0.2);
  return spec;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("diracwell_sweep_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Sweep, FillsEveryCellInOrder) {
  SweepOptions opts;
  opts.evaluator = fake_number;
  const auto r = run_sweep(grid_spec(), opts);
  ASSERT_EQ(r.rows, 10u);
  ASSERT_EQ(r.cols, 4u);
  ASSERT_TRUE(r.complete());
  for (std::size_t i = 0; i < r.rows; ++i) {
    for (std::size_t j = 0; j < r.cols; ++j) {
      const auto& c = r.at(i, j);
      EXPECT_EQ(c.status, CellStatus::ok);
      EXPECT_NEAR(c.omega0_c2, 0.1 + 0.1 * i, 1e-12);
      EXPECT_NEAR(c.b_c2_per_t1, 0.2 * j, 1e-12);
      RunConfig cfg;
      cfg.omega0_c2 = c.omega0_c2;
      cfg.b_c2_per_t1 = c.b_c2_per_t1;
      EXPECT_EQ(c.number, fake_number(cfg, 1));
    }
  }
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
  SweepOptions serial;
  serial.evaluator = fake_number;
  SweepOptions pooled = serial;
  pooled.workers = 4;
  const auto a = run_sweep(grid_spec(), serial);
  const auto b = run_sweep(grid_spec(), pooled);
  for (std::size_t k = 0; k < a.cells.size(); ++k) EXPECT_EQ(a.cells[k].number, b.cells[k].number);
}

TEST(Sweep, FailuresAreRecordedAndSweepContinues) {
  SweepOptions opts;
  opts.workers = 2;
  opts.evaluator = [](const RunConfig& cfg, unsigned) -> double {
    if (std::abs(cfg.omega0_c2 - 0.3) < 1e-9) throw NumericalError("diverged");
    if (std::abs(cfg.omega0_c2 - 0.5) < 1e-9) return std::nan("");
    return 1.0;
  };
  const auto r = run_sweep(grid_spec(), opts);
  EXPECT_TRUE(r.complete());
  std::size_t failed = 0;
  for (const auto& c : r.cells) {
    if (c.status == CellStatus::failed) {
      ++failed;
      EXPECT_TRUE(std::isnan(c.number));
      EXPECT_FALSE(c.message.empty());
    }
  }
  EXPECT_EQ(failed, 8u);
  EXPECT_EQ(r.at(2, 1).message, "diverged");
}

TEST(Sweep, ResumeSkipsFinishedCellsAndMatchesUninterrupted) {
  const auto dir = scratch("resume");
  std::atomic<int> calls{0};
  SweepOptions opts;
  opts.checkpoint = dir / "ck.jsonl";
  opts.evaluator = [&](const RunConfig& cfg, unsigned t) {
    ++calls;
    return fake_number(cfg, t);
  };
  opts.max_new_cells = 15;
  const auto partial = run_sweep(grid_spec(), opts);
  EXPECT_FALSE(partial.complete());
  EXPECT_EQ(calls.load(), 15);

  // Simulate a writer killed mid-line.
  {
    std::ofstream out(opts.checkpoint, std::ios::app);
    out << R"({"i":9,"j":3,"omega0_c2":1.0,"b_c)";
  }
  opts.max_new_cells = std::numeric_limits<std::size_t>::max();
  const auto resumed = run_sweep(grid_spec(), opts);
  EXPECT_TRUE(resumed.complete());
  EXPECT_EQ(calls.load(), 40);

  SweepOptions fresh;
  fresh.evaluator = fake_number;
  const auto straight = run_sweep(grid_spec(), fresh);
  for (std::size_t k = 0; k < straight.cells.size(); ++k) {
    EXPECT_EQ(resumed.cells[k].number, straight.cells[k].number);
    EXPECT_EQ(resumed.cells[k].omega0_c2, straight.cells[k].omega0_c2);
  }

  // A second resume has nothing left to do.
  const auto again = run_sweep(grid_spec(), opts);
  EXPECT_EQ(calls.load(), 40);
  EXPECT_EQ(again.cells.size(), 40u);
  fs::remove_all(dir);
}

TEST(Sweep, CheckpointFromOtherConfigIsRejected) {
  const auto dir = scratch("hash");
  SweepOptions opts;
  opts.checkpoint = dir / "ck.jsonl";
  opts.evaluator = fake_number;
  opts.max_new_cells = 3;
  run_sweep(grid_spec(), opts);
  auto other = grid_spec();
  other.base.v1_c2 = 1.0;
  EXPECT_THROW(run_sweep(other, opts), ConfigError);
  fs::remove_all(dir);
}

TEST(Sweep, CheckpointRecordsAreSelfDescribing) {
  const auto dir = scratch("records");
  SweepOptions opts;
  opts.checkpoint = dir / "ck.jsonl";
  opts.evaluator = fake_number;
  opts.max_new_cells = 2;
  const auto spec = grid_spec();
  run_sweep(spec, opts);
  std::istringstream lines(slurp(opts.checkpoint));
  std::string line;
  ASSERT_TRUE(std::getline(lines, line));
  const auto rec = json::parse(line);
  for (const char* key : {"i", "j", "omega0_c2", "b_c2_per_t1", "N", "status", "runtime_s",
                          "preset_hash"}) {
    EXPECT_TRUE(rec.contains(key)) << key;
  }
  EXPECT_EQ(rec.at("preset_hash").get<std::string>(), spec.hash());
  fs::remove_all(dir);
}

TEST(Sweep, InvalidSpecs) {
  SweepSpec empty;
  empty.axis1 = {"omega0_c2", {}};
  EXPECT_THROW(run_sweep(empty), ConfigError);
  SweepSpec same = grid_spec();
  same.axis2 = SweepAxis{"omega0_c2", {1.0}};
  EXPECT_THROW(run_sweep(same), ConfigError);
  SweepSpec big;
  big.axis1 = SweepAxis::range("omega0_c2", 0.0, 200.0, 1.0);
  big.axis2 = SweepAxis::range("b_c2_per_t1", 0.0, 100.0, 1.0);
  EXPECT_THROW(run_sweep(big), ConfigError);
}

TEST(FindPeaks, RecoversSinePeriod) {
  std::vector<double> x;
  std::vector<double> y;
  for (int k = 0; k <= 200; ++k) {
    x.push_back(0.01 * k);
    y.push_back(std::sin(2.0 * std::numbers::pi * x.back() / 0.25));
  }
  const auto r = find_peaks(x, y);
  ASSERT_EQ(r.positions.size(), 8u);
  EXPECT_NEAR(r.mean_spacing, 0.25, 1e-12);
  EXPECT_NEAR(r.positions.front(), 0.0625, 0.01);
}

TEST(FindPeaks, MonotoneHasNone) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  const std::vector<double> y{1, 2, 3, 4, 5, 6};
  const auto r = find_peaks(x, y);
  EXPECT_TRUE(r.indices.empty());
  EXPECT_TRUE(std::isnan(r.mean_spacing));
}

TEST(FindPeaks, PlateausAreNotPeaks) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6};
  const std::vector<double> y{0, 1, 1, 0, 2, 0, 0};
  const auto r = find_peaks(x, y);
  ASSERT_EQ(r.indices.size(), 1u);
  EXPECT_EQ(r.indices[0], 4u);
}

TEST(FindPeaks, Preconditions) {
  const std::vector<double> four{0, 1, 2, 3};
  EXPECT_THROW(find_peaks(four, four), ConfigError);
  const std::vector<double> uneven{0, 1, 2, 4, 5};
  const std::vector<double> y{0, 1, 0, 1, 0};
  EXPECT_THROW(find_peaks(uneven, y), ConfigError);
  const std::vector<double> shortx{0, 1, 2, 3, 4};
  const std::vector<double> longy{0, 1, 0, 1, 0, 1};
  EXPECT_THROW(find_peaks(shortx, longy), ConfigError);
}
