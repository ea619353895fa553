#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fomc/estimator.hpp"
#include "fomc/model_builder.hpp"

namespace fomc {

struct ReferenceSegment {
  double start_day = 0.0;
  double value = 0.0;
};

/// Which part of the augmented state Q penalizes.
enum class StateWeighting { kFull, kLeadingBlock };

struct ScenarioConfig {
  std::string name = "amiodarone-nominal";
  /// Parameters of the controller's model.
  PkParameters pk;
  /// Parameters of the simulated plant; equal to pk unless perturbed.
  PkParameters plant_pk;
  double step = 0.1;  // day
  int memory = 25;
  int horizon = 60;
  double q_scale = 0.25;
  double r_weight = 5.0;
  StateWeighting q_weighting = StateWeighting::kFull;
  std::vector<ReferenceSegment> reference{{0.0, 0.5}, {80.0, 1.0}};
  double u_max = 2.0;               // ng/day
  double output_upper_bound = 1.03;  // ng
  double soft_penalty = 1e6;
  double total_days = 150.0;
  ObserverWeights observer;
  double filter_w_low = 1e-2;
  double filter_w_high = 1e3;
  int filter_stages = 8;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double integrator_step = 1e-3;
  /// Tolerances for the per-run invariant checks.
  double offset_tolerance = 1e-3;
  double output_tolerance = 1e-4;
  double settle_window_days = 5.0;

  void validate() const;
  int num_samples() const;
  double reference_at(double t) const;
};

ScenarioConfig amiodarone_nominal();

/// Unknown keys are rejected; missing keys keep the preset's values.
ScenarioConfig scenario_from_json(const nlohmann::json& j,
                                  const ScenarioConfig& base = amiodarone_nominal());
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct TraceRow {
  double t = 0.0;
  double r = 0.0;
  double y = 0.0;
  double u = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double d_hat = 0.0;
  /// Estimate of the current first-compartment amount.
  double a1_hat = 0.0;
  double slack = 0.0;
};

struct SegmentCheck {
  double start_day = 0.0;
  double end_day = 0.0;
  double reference = 0.0;
  /// Mean |y - r| over the last settle_window_days of the segment.
  double mean_abs_error = 0.0;
  bool passed = false;
};

struct InvariantReport {
  int input_bound_violations = 0;
  int output_bound_violations = 0;
  int nonzero_slack_steps = 0;
  double max_slack = 0.0;
  double max_output = 0.0;
  double min_input = 0.0;
  double max_input = 0.0;
  double max_target_error = 0.0;
  std::vector<SegmentCheck> segments;

  bool offset_free() const;
  bool passed() const;
};

struct SimulationTrace {
  std::string name;
  std::vector<TraceRow> rows;
  double J = 0.0;
  InvariantReport invariants;
  bool completed = false;
  std::string error;
  double runtime_seconds = 0.0;
  long qp_iterations = 0;
  int max_qp_iterations = 0;
  double observer_spectral_radius = 0.0;

  bool ok() const { return completed && invariants.passed(); }
};

/// Discrete control model and Q for the scenario (nominal parameters).
DiscreteLtiModel control_model(const ScenarioConfig& cfg);

/// Runs the whole scenario. Controller or plant errors end the run early;
/// the partial trace is returned with completed = false and the message.
SimulationTrace run_closed_loop(const ScenarioConfig& cfg);

/// (1/N) sum (y - r)^2 + u^2 over the rows.
double performance_index(const std::vector<TraceRow>& rows);

struct SweepCell {
  std::string parameter;  // "nominal", "k10", ..., or "nu"
  int direction = 0;      // -1, 0, +1
  double value = 0.0;     // perturbed parameter value or memory length
  SimulationTrace trace;
};

/// One nominal run plus one run per (parameter, +-fraction), plant perturbed
/// and controller nominal. Runs execute on up to `threads` threads.
std::vector<SweepCell> sensitivity_sweep(const ScenarioConfig& base,
                                         const std::vector<std::string>& parameters,
                                         double fraction, int threads = 1);

/// One run per memory length of the controller model; plant unchanged.
std::vector<SweepCell> memory_sweep(const ScenarioConfig& base, const std::vector<int>& lengths,
                                    int threads = 1);

enum class SummaryLayout { kRun, kParameters, kMemory };

/// Writes <name>.csv per run, summary.txt and manifest.json into `dir`.
/// Throws on an empty list before touching the filesystem.
void emit_outputs(const std::vector<SweepCell>& cells, const ScenarioConfig& base,
                  SummaryLayout layout, const std::filesystem::path& dir);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace fomc
