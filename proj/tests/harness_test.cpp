#include "fomc/harness.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fomc/errors.hpp"

namespace fomc {
namespace {

namespace fs = std::filesystem;

// 50-day version of the nominal scenario, step in the reference at day 25.
ScenarioConfig short_scenario() {
  ScenarioConfig c = amiodarone_nominal();
  c.name = "short";
  c.total_days = 50.0;
  c.horizon = 20;
  c.reference = {{0.0, 0.5}, {25.0, 0.8}};
  return c;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fomc_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Scenario, NominalPresetValues) {
  const ScenarioConfig c = amiodarone_nominal();
  EXPECT_EQ(c.num_samples(), 1500);
  EXPECT_EQ(c.reference_at(0.0), 0.5);
  EXPECT_EQ(c.reference_at(79.9), 0.5);
  EXPECT_EQ(c.reference_at(80.0), 1.0);
  EXPECT_EQ(c.horizon, 60);
  EXPECT_EQ(c.memory, 25);
  EXPECT_NO_THROW(c.validate());
}

TEST(Scenario, JsonRoundTrip) {
  ScenarioConfig c = short_scenario();
  c.plant_pk.k10 *= 1.1;
  c.q_weighting = StateWeighting::kLeadingBlock;
  c.seed = 17;
  const ScenarioConfig back = scenario_from_json(scenario_to_json(c));
  EXPECT_EQ(scenario_to_json(back).dump(), scenario_to_json(c).dump());
}

TEST(Scenario, PartialJsonKeepsPresetAndPlantFollowsPk) {
  const auto j = nlohmann::json::parse(R"({"horizon": 10, "pk": {"k10": 1.2}})");
  const ScenarioConfig c = scenario_from_json(j);
  EXPECT_EQ(c.horizon, 10);
  EXPECT_EQ(c.pk.k10, 1.2);
  EXPECT_EQ(c.plant_pk.k10, 1.2);
  EXPECT_EQ(c.step, 0.1);
}

TEST(Scenario, RejectsInvalidInput) {
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"horizn": 10})")), InvalidArgument);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(
                   R"({"reference": [{"start_day": 0, "value": 1}, {"start_day": 0, "value": 2}]})")),
               InvalidArgument);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"reference": [{"start_day": 1, "value": 1}]})")),
               InvalidArgument);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"total_days": 50})")), InvalidArgument);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"step": "x"})")), InvalidArgument);
}

TEST(ClosedLoop, ZeroReferenceStaysAtOrigin) {
  ScenarioConfig c = short_scenario();
  c.reference = {{0.0, 0.0}};
  const SimulationTrace t = run_closed_loop(c);
  ASSERT_TRUE(t.completed) << t.error;
  ASSERT_EQ(t.rows.size(), 500u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.u, 0.0);
    EXPECT_EQ(row.y, 0.0);
  }
  EXPECT_EQ(t.J, 0.0);
}

TEST(ClosedLoop, ShortScenarioIsOffsetFreeAndFeasible) {
  const SimulationTrace t = run_closed_loop(short_scenario());
  ASSERT_TRUE(t.completed) << t.error;
  const InvariantReport& inv = t.invariants;
  EXPECT_EQ(inv.input_bound_violations, 0);
  EXPECT_GE(inv.min_input, 0.0);
  EXPECT_LE(inv.max_input, 2.0);
  EXPECT_LE(inv.max_target_error, 1e-9);
  ASSERT_EQ(inv.segments.size(), 2u);
  EXPECT_TRUE(inv.offset_free());
  EXPECT_TRUE(std::isfinite(t.J));
  EXPECT_LT(t.observer_spectral_radius, 1.0);
}

TEST(ClosedLoop, PerturbedPlantCompletes) {
  ScenarioConfig c = short_scenario();
  c.plant_pk.k10 *= 1.1;
  const SimulationTrace t = run_closed_loop(c);
  ASSERT_TRUE(t.completed) << t.error;
  EXPECT_EQ(t.invariants.input_bound_violations, 0);
  EXPECT_TRUE(std::isfinite(t.J));
  EXPECT_TRUE(t.invariants.offset_free());
}

TEST(ClosedLoop, UnreachableReferenceFailsInvariants) {
  ScenarioConfig c = short_scenario();
  c.u_max = 1e-12;
  c.reference = {{0.0, 0.5}};
  c.output_upper_bound = 1e-12;
  const SimulationTrace t = run_closed_loop(c);
  EXPECT_TRUE(t.completed) << t.error;  // soft bound keeps the QP feasible
  EXPECT_FALSE(t.invariants.offset_free());
  EXPECT_FALSE(t.ok());
}

TEST(ClosedLoop, JMatchesRecomputationFromCsv) {
  const SimulationTrace t = run_closed_loop(short_scenario());
  const fs::path dir = temp_dir("j");
  emit_outputs({{"run", 0, 0.0, t}}, short_scenario(), SummaryLayout::kRun, dir);
  std::ifstream in(dir / "short.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,r,y,u,A1,A2,dhat");
  double sum = 0.0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double x = 0.0;
      std::from_chars(cell.data(), cell.data() + cell.size(), x);
      v.push_back(x);
    }
    ASSERT_EQ(v.size(), 7u);
    sum += (v[2] - v[1]) * (v[2] - v[1]) + v[3] * v[3];
    ++n;
  }
  EXPECT_EQ(n, t.rows.size());
  EXPECT_NEAR(sum / n, t.J, 1e-12);
  EXPECT_EQ(performance_index(t.rows), t.J);
  fs::remove_all(dir);
}

TEST(ClosedLoop, DeterministicCsvBytes) {
  const fs::path a = temp_dir("det_a"), b = temp_dir("det_b");
  emit_outputs({{"run", 0, 0.0, run_closed_loop(short_scenario())}}, short_scenario(),
               SummaryLayout::kRun, a);
  emit_outputs({{"run", 0, 0.0, run_closed_loop(short_scenario())}}, short_scenario(),
               SummaryLayout::kRun, b);
  EXPECT_EQ(slurp(a / "short.csv"), slurp(b / "short.csv"));
  EXPECT_EQ(slurp(a / "summary.txt"), slurp(b / "summary.txt"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(ClosedLoop, NoiseIsSeeded) {
  ScenarioConfig c = short_scenario();
  c.total_days = 5.0;
  c.reference = {{0.0, 0.5}};
  c.noise_sigma = 0.01;
  c.seed = 3;
  const SimulationTrace t1 = run_closed_loop(c), t2 = run_closed_loop(c);
  c.seed = 4;
  const SimulationTrace t3 = run_closed_loop(c);
  EXPECT_EQ(t1.J, t2.J);
  EXPECT_NE(t1.J, t3.J);
}

TEST(EmitOutputs, EmptyListWritesNothing) {
  const fs::path dir = temp_dir("empty");
  EXPECT_THROW(emit_outputs({}, short_scenario(), SummaryLayout::kRun, dir), InvalidArgument);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(EmitOutputs, NominalRunHas1500Rows) {
  const SimulationTrace t = run_closed_loop(amiodarone_nominal());
  ASSERT_TRUE(t.completed) << t.error;
  EXPECT_EQ(t.rows.size(), 1500u);
  const fs::path dir = temp_dir("nominal");
  emit_outputs({{"run", 0, 0.0, t}}, amiodarone_nominal(), SummaryLayout::kRun, dir);
  std::ifstream in(dir / "amiodarone-nominal.csv");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 1501);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("runs").size(), 1u);
  EXPECT_EQ(manifest.at("runs")[0].at("J").get<double>(), t.J);
  fs::remove_all(dir);
}

TEST(Sweeps, ZeroPerturbationReproducesNominal) {
  const auto cells = sensitivity_sweep(short_scenario(), {"k10", "alpha"}, 0.0, 2);
  ASSERT_EQ(cells.size(), 5u);
  for (const auto& c : cells) EXPECT_EQ(c.trace.J, cells.front().trace.J) << c.trace.name;
}

TEST(Sweeps, LargerPerturbationMovesJFurther) {
  const auto small = sensitivity_sweep(short_scenario(), {"k21"}, 0.1, 1);
  const auto large = sensitivity_sweep(short_scenario(), {"k21"}, 0.5, 1);
  const double nominal = small[0].trace.J;
  for (int i = 1; i <= 2; ++i) {
    ASSERT_TRUE(large[i].trace.completed) << large[i].trace.error;
    EXPECT_GT(std::abs(large[i].trace.J - nominal), std::abs(small[i].trace.J - nominal));
  }
}

TEST(Sweeps, RejectsUnknownParameter) {
  EXPECT_THROW(sensitivity_sweep(short_scenario(), {"k99"}, 0.1), InvalidArgument);
}

TEST(Sweeps, RepeatedMemoryLengthIsDeterministic) {
  const auto cells = memory_sweep(short_scenario(), {25, 25}, 2);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].trace.J, cells[1].trace.J);
  EXPECT_NE(cells[0].trace.name, cells[1].trace.name);
}

TEST(Sweeps, MinimalMemoryStillOffsetFree) {
  const auto cells = memory_sweep(short_scenario(), {1, 25}, 1);
  ASSERT_TRUE(cells[0].trace.completed) << cells[0].trace.error;
  EXPECT_TRUE(cells[0].trace.invariants.offset_free());
  auto max_dhat = [](const SimulationTrace& t) {
    double m = 0.0;
    for (const auto& r : t.rows) m = std::max(m, std::abs(r.d_hat));
    return m;
  };
  EXPECT_GT(max_dhat(cells[0].trace), max_dhat(cells[1].trace));
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  const double x = 1.0 / 3.0;
  double back = 0.0;
  const std::string s = format_double(x);
  std::from_chars(s.data(), s.data() + s.size(), back);
  EXPECT_EQ(back, x);
}

}  // namespace
}  // namespace fomc
