#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "diracwell/config.hpp"

using namespace diracwell;

namespace {

std::string error_of(const json& j) {
  try {
    RunConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(RunConfig, DefaultsAreTheReferenceSetup) {
  const RunConfig cfg;
  const auto pot = cfg.potential();
  const auto ref = PotentialConfig::reference();
  EXPECT_DOUBLE_EQ(pot.static_depth, ref.static_depth);
  EXPECT_DOUBLE_EQ(pot.oscillating_depth, ref.oscillating_depth);
  EXPECT_DOUBLE_EQ(pot.edge_width, ref.edge_width);
  EXPECT_DOUBLE_EQ(pot.well_width, ref.well_width);
  EXPECT_DOUBLE_EQ(pot.ramp_time, ref.ramp_time);
  EXPECT_DOUBLE_EQ(pot.interaction_time, ref.interaction_time);
  EXPECT_NEAR(pot.omega0, ref.omega0, 1e-9);
  EXPECT_NEAR(pot.chirp, ref.chirp, 1e-9);
  EXPECT_EQ(pot.phase, 0.0);
  EXPECT_EQ(cfg.length_au, 2.0);
  EXPECT_EQ(cfg.points, 2048u);
  EXPECT_EQ(cfg.dt_au, 1e-6);
}

TEST(RunConfig, UnitConversion) {
  RunConfig cfg;
  cfg.omega0_c2 = 1.0;
  cfg.b_c2_per_t1 = 1.2;
  const auto pot = cfg.potential();
  EXPECT_DOUBLE_EQ(pot.omega0, kRestEnergy);
  EXPECT_NEAR(pot.chirp * pot.interaction_time, 1.2 * kRestEnergy, 1e-9);
  EXPECT_NEAR(pot.effective_frequency() / kRestEnergy, 2.2, 1e-12);
}

TEST(RunConfig, PresetThenOverrides) {
  auto cfg = RunConfig::from_json({{"preset", "ci"}});
  EXPECT_EQ(cfg.points, 512u);
  EXPECT_EQ(cfg.dt_au, 5e-6);
  cfg = RunConfig::from_json({{"Nz", 256}, {"preset", "ci"}});
  EXPECT_EQ(cfg.points, 256u);
  EXPECT_EQ(cfg.dt_au, 5e-6);
}

TEST(RunConfig, RoundTrip) {
  RunConfig cfg;
  cfg.preset = "ci";
  cfg.points = 384;
  cfg.omega0_c2 = 1.9;
  cfg.b_c2_per_t1 = 0.1;
  cfg.phi_rad = 0.3;
  cfg.ramp = RampConvention::literal;
  cfg.pulse_window = SpectrumWindow::hann;
  cfg.bound_depth = BoundWellDepth::combined;
  cfg.threads = 3;
  cfg.out_dir = "somewhere";
  ScanSettings scan;
  scan.axis1 = SweepAxis::range("b_c2_per_t1", 0.0, 2.0, 0.02);
  scan.axis2 = SweepAxis{"omega0_c2", {0.5, 1.0}};
  scan.workers = 2;
  cfg.scan = scan;
  const json j = cfg.to_json();
  const RunConfig back = RunConfig::from_json(json::parse(j.dump()));
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(physics_hash(back), physics_hash(cfg));
}

TEST(RunConfig, MetaFileIsAcceptedAsConfig) {
  RunConfig cfg;
  cfg.omega0_c2 = 1.1;
  const json meta = {{"command", "evolve"}, {"config", cfg.to_json()}, {"N_final", 2.0}};
  EXPECT_EQ(RunConfig::from_json(meta).to_json(), cfg.to_json());
}

TEST(RunConfig, ErrorsNameTheKey) {
  EXPECT_NE(error_of({{"omega0_c2", "fast"}}).find("omega0_c2"), std::string::npos);
  EXPECT_NE(error_of({{"Nz", -4}}).find("Nz"), std::string::npos);
  EXPECT_NE(error_of({{"Nz", 1.5}}).find("Nz"), std::string::npos);
  EXPECT_NE(error_of({{"frequency", 1.0}}).find("frequency"), std::string::npos);
  EXPECT_NE(error_of({{"preset", "huge"}}).find("preset"), std::string::npos);
  EXPECT_NE(error_of({{"ramp", "sideways"}}).find("ramp"), std::string::npos);
  EXPECT_NE(error_of({{"threads", 0}}).find("threads"), std::string::npos);
  EXPECT_NE(error_of({{"bin_width_c2", 0.0}}).find("bin_width_c2"), std::string::npos);
  EXPECT_NE(error_of({{"scan", {{"workers", 2}}}}).find("scan.axis1"), std::string::npos);
  EXPECT_NE(error_of({{"scan", {{"axis1", {{"name", "V1_c2"}, {"values", {1.0}}}}}}}).find(
                "scan.axis1.name"),
            std::string::npos);
  EXPECT_NE(error_of({{"scan", {{"axis1", {{"name", "omega0_c2"}, {"values", json::array()}}}}}})
                .find("scan.axis1"),
            std::string::npos);
  EXPECT_NE(error_of(json::array()).find("config"), std::string::npos);
}

TEST(RunConfig, PhysicalValidationHappensOnUse) {
  auto cfg = RunConfig::from_json({{"b_c2_per_t1", -0.5}});
  EXPECT_THROW(cfg.potential(), ConfigError);
  cfg = RunConfig::from_json({{"Nz", 511}});
  EXPECT_THROW(cfg.grid(), ConfigError);
  cfg = RunConfig::from_json({{"dt_au", 1e-5}});
  EXPECT_THROW(cfg.schedule(), ConfigError);
}

TEST(RunConfig, HashIgnoresExecutionSettings) {
  RunConfig a;
  RunConfig b;
  b.threads = 8;
  b.out_dir = "elsewhere";
  EXPECT_EQ(physics_hash(a), physics_hash(b));
  b.omega0_c2 = 0.6;
  EXPECT_NE(physics_hash(a), physics_hash(b));
}

TEST(Parsing, Assignment) {
  auto [k1, v1] = parse_assignment("omega0_c2=1.25");
  EXPECT_EQ(k1, "omega0_c2");
  EXPECT_EQ(v1.get<double>(), 1.25);
  auto [k2, v2] = parse_assignment("ramp=literal");
  EXPECT_EQ(v2.get<std::string>(), "literal");
  EXPECT_THROW(parse_assignment("novalue"), ConfigError);
  EXPECT_THROW(parse_assignment("=3"), ConfigError);
}

TEST(Parsing, Axis) {
  const auto range = parse_axis("b_c2_per_t1=0:2:0.02");
  EXPECT_EQ(range.name, "b_c2_per_t1");
  ASSERT_EQ(range.values.size(), 101u);
  EXPECT_NEAR(range.values[50], 1.0, 1e-12);
  EXPECT_NEAR(range.values.back(), 2.0, 1e-12);
  const auto list = parse_axis("omega0_c2=0.5,1.0,1.9");
  EXPECT_EQ(list.values, (std::vector<double>{0.5, 1.0, 1.9}));
  EXPECT_THROW(parse_axis("omega0_c2"), ConfigError);
  EXPECT_THROW(parse_axis("omega0_c2=1:2"), ConfigError);
  EXPECT_THROW(parse_axis("omega0_c2=a,b"), ConfigError);
  EXPECT_THROW(parse_axis("phi_rad=0:1:0.1"), ConfigError);
  EXPECT_THROW(parse_axis("omega0_c2=2:1:0.1"), ConfigError);
}

TEST(Hash, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cull), "af63dc4c8601ec8c");
}
