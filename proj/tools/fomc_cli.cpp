// Command-line front end: closed-loop runs, sweeps and model diagnostics.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>

#include "fomc/errors.hpp"
#include "fomc/harness.hpp"
#include "fomc/plant.hpp"
#include "fomc/serialization.hpp"

namespace {

using namespace fomc;

struct GlobalOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

ScenarioConfig scenario(const GlobalOptions& g) {
  ScenarioConfig cfg = g.config.empty() ? amiodarone_nominal() : load_scenario(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void print_run(const SimulationTrace& t) {
  const InvariantReport& inv = t.invariants;
  std::cout << t.name << ": J = " << std::setprecision(10) << t.J << "  rows = " << t.rows.size()
            << "  time = " << std::setprecision(3) << t.runtime_seconds << " s\n";
  if (!t.completed) std::cout << "  aborted: " << t.error << '\n';
  std::cout << std::setprecision(6) << "  u in [" << inv.min_input << ", " << inv.max_input
            << "], max y = " << inv.max_output << ", slack steps = " << inv.nonzero_slack_steps
            << " (max " << inv.max_slack << ")\n";
  for (const auto& s : inv.segments) {
    std::cout << "  r = " << s.reference << " on [" << s.start_day << ", " << s.end_day
              << "): mean |y - r| at end = " << s.mean_abs_error << (s.passed ? "" : "  FAIL")
              << '\n';
  }
  std::cout << "  invariants: " << (t.ok() ? "pass" : "FAIL") << '\n';
}

int finish(const std::vector<SweepCell>& cells, const ScenarioConfig& cfg, SummaryLayout layout,
           const GlobalOptions& g) {
  for (const auto& c : cells) print_run(c.trace);
  emit_outputs(cells, cfg, layout, g.out);
  std::ifstream summary(std::filesystem::path(g.out) / "summary.txt");
  std::cout << '\n' << summary.rdbuf();
  const bool ok = std::all_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.trace.ok(); });
  return ok ? 0 : 1;
}

int check_model(const GlobalOptions& g) {
  const ScenarioConfig cfg = scenario(g);
  const DiscreteLtiModel model = control_model(cfg);
  const RankReport r = check_augmented_observability(model);
  std::cout << "control model: nu = " << model.memory << ", h = " << model.step
            << ", augmented dim = " << model.augmented_dim() << '\n'
            << "  observability rank " << r.observability_rank << " / " << r.state_dim
            << (r.observable ? " (observable)" : " (not observable)") << '\n'
            << "  detectable: " << (r.detectable ? "yes" : "no") << '\n'
            << "  [A - I, G; C, C_d] rank " << r.disturbance_matrix_rank << " / "
            << r.disturbance_matrix_cols << (r.disturbance_rank_ok ? "" : "  FAIL") << '\n'
            << "  dim(d) <= dim(y): " << (r.dimension_ok ? "yes" : "no") << '\n'
            << "  augmented observer check: " << (r.passed() ? "pass" : "FAIL") << '\n';
  std::filesystem::create_directories(g.out);
  save_model(model, std::filesystem::path(g.out) / "model.json");
  return r.passed() ? 0 : 1;
}

int oustaloup_bode(const GlobalOptions& g, int points, double w_min, double w_max) {
  const ScenarioConfig cfg = scenario(g);
  if (points < 2 || !(w_min > 0.0 && w_min < w_max)) {
    throw InvalidArgument("need at least 2 points and 0 < w-min < w-max");
  }
  const OustaloupFilter f =
      build_oustaloup(cfg.plant_pk.beta(), cfg.filter_w_low, cfg.filter_w_high, cfg.filter_stages);
  std::filesystem::create_directories(g.out);
  const auto path = std::filesystem::path(g.out) / "oustaloup_bode.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "w,magnitude,phase_deg,ideal_magnitude,ideal_phase_deg\n";
  double worst_mag = 0.0, worst_phase = 0.0;
  const double ideal_phase = f.order * 90.0;
  for (int i = 0; i < points; ++i) {
    const double w = w_min * std::pow(w_max / w_min, static_cast<double>(i) / (points - 1));
    const auto h = f.state_space_response(w);
    const double mag = std::abs(h), phase = std::arg(h) * 180.0 / std::numbers::pi;
    const double ideal = std::pow(w, f.order);
    out << format_double(w) << ',' << format_double(mag) << ',' << format_double(phase) << ','
        << format_double(ideal) << ',' << format_double(ideal_phase) << '\n';
    worst_mag = std::max(worst_mag, std::abs(mag / ideal - 1.0));
    worst_phase = std::max(worst_phase, std::abs(phase - ideal_phase));
  }
  std::cout << "beta = " << f.order << ", N_f = " << f.stages << ", band [" << f.w_low << ", "
            << f.w_high << "] rad/day\n"
            << "  max relative magnitude error " << worst_mag << ", max phase error "
            << worst_phase << " deg over [" << w_min << ", " << w_max << "]\n"
            << "  wrote " << path.string() << '\n';
  return 0;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offset-free MPC for fractional-order systems"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Scenario file (JSON); defaults to amiodarone-nominal")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Measurement noise seed");
  app.add_option("--threads", g.threads, "Concurrent runs in sweeps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.fallthrough();

  auto* run = app.add_subcommand("run", "Single closed-loop run");
  auto* sweep_params = app.add_subcommand("sweep-params", "Plant parameter sensitivity sweep");
  double perturbation = 0.1;
  std::string params = "k10,k12,k21,alpha";
  sweep_params->add_option("--perturbation", perturbation, "Relative perturbation")
      ->capture_default_str();
  sweep_params->add_option("--params", params, "Comma-separated parameter list")
      ->capture_default_str();
  auto* sweep_memory = app.add_subcommand("sweep-memory", "Controller memory length sweep");
  std::vector<int> lengths{5, 15, 25, 35};
  sweep_memory->add_option("--lengths", lengths, "Memory lengths")->delimiter(',')->capture_default_str();
  auto* check = app.add_subcommand("check-model", "Observability and rank report for the control model");
  auto* bode = app.add_subcommand("oustaloup-bode", "Frequency response of the plant's Oustaloup filter");
  int points = 50;
  double w_min = 1e-3, w_max = 1e4;
  bode->add_option("--points", points)->capture_default_str();
  bode->add_option("--w-min", w_min)->capture_default_str();
  bode->add_option("--w-max", w_max)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ScenarioConfig cfg = scenario(g);
      SimulationTrace t = run_closed_loop(cfg);
      return finish({{"run", 0, 0.0, std::move(t)}}, cfg, SummaryLayout::kRun, g);
    }
    if (*sweep_params) {
      const ScenarioConfig cfg = scenario(g);
      return finish(sensitivity_sweep(cfg, split(params), perturbation, g.threads), cfg,
                    SummaryLayout::kParameters, g);
    }
    if (*sweep_memory) {
      const ScenarioConfig cfg = scenario(g);
      return finish(memory_sweep(cfg, lengths, g.threads), cfg, SummaryLayout::kMemory, g);
    }
    if (*check) return check_model(g);
    if (*bode) return oustaloup_bode(g, points, w_min, w_max);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
