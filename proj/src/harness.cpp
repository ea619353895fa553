#include "fomc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "fomc/dare.hpp"
#include "fomc/errors.hpp"
#include "fomc/mpc.hpp"
#include "fomc/plant.hpp"

namespace fomc {

using nlohmann::json;

void ScenarioConfig::validate() const {
  pk.validate();
  plant_pk.validate();
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw InvalidArgument(std::string("scenario: ") + msg);
  };
  require(step > 0.0 && std::isfinite(step), "step must be positive");
  require(memory >= 1, "memory must be at least 1");
  require(horizon >= 1, "horizon must be at least 1");
  require(q_scale > 0.0, "q_scale must be positive");
  require(r_weight > 0.0, "r_weight must be positive");
  require(!reference.empty(), "reference schedule is empty");
  require(reference.front().start_day == 0.0, "reference schedule must start at day 0");
  for (std::size_t i = 1; i < reference.size(); ++i) {
    require(reference[i].start_day > reference[i - 1].start_day,
            "reference start days must be strictly increasing");
  }
  require(total_days > reference.back().start_day, "total_days must cover the schedule");
  require(u_max > 0.0, "u_max must be positive");
  require(output_upper_bound > 0.0, "output bound must be positive");
  require(soft_penalty > 0.0, "soft penalty must be positive");
  require(filter_w_low > 0.0 && filter_w_low < filter_w_high, "need 0 < filter w_low < w_high");
  require(filter_stages >= 1, "filter needs at least one stage");
  require(noise_sigma >= 0.0, "noise sigma must be nonnegative");
  require(integrator_step > 0.0, "integrator step must be positive");
  require(settle_window_days > 0.0, "settle window must be positive");
}

int ScenarioConfig::num_samples() const {
  return static_cast<int>(std::ceil(total_days / step - 1e-9));
}

double ScenarioConfig::reference_at(double t) const {
  double r = reference.front().value;
  for (const auto& seg : reference) {
    if (t + 1e-9 >= seg.start_day) r = seg.value;
  }
  return r;
}

ScenarioConfig amiodarone_nominal() { return ScenarioConfig{}; }

namespace {

json pk_to_json(const PkParameters& p) {
  return json{{"k10", p.k10}, {"k12", p.k12}, {"k21", p.k21}, {"alpha", p.alpha}};
}

PkParameters pk_from_json(const json& j, PkParameters p) {
  for (const auto& [key, value] : j.items()) {
    if (key == "k10") p.k10 = value.get<double>();
    else if (key == "k12") p.k12 = value.get<double>();
    else if (key == "k21") p.k21 = value.get<double>();
    else if (key == "alpha") p.alpha = value.get<double>();
    else throw InvalidArgument("scenario: unknown pk key '" + key + "'");
  }
  return p;
}

const char* weighting_name(StateWeighting w) {
  return w == StateWeighting::kFull ? "full" : "leading-block";
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j, const ScenarioConfig& base) {
  ScenarioConfig c = base;
  try {
    bool plant_given = false;
    for (const auto& [key, v] : j.items()) {
      if (key == "name") c.name = v.get<std::string>();
      else if (key == "pk") c.pk = pk_from_json(v, c.pk);
      else if (key == "plant_pk") plant_given = true;
      else if (key == "step") c.step = v.get<double>();
      else if (key == "memory") c.memory = v.get<int>();
      else if (key == "horizon") c.horizon = v.get<int>();
      else if (key == "q_scale") c.q_scale = v.get<double>();
      else if (key == "r_weight") c.r_weight = v.get<double>();
      else if (key == "q_weighting") {
        const auto s = v.get<std::string>();
        if (s == "full") c.q_weighting = StateWeighting::kFull;
        else if (s == "leading-block") c.q_weighting = StateWeighting::kLeadingBlock;
        else throw InvalidArgument("scenario: q_weighting must be 'full' or 'leading-block'");
      } else if (key == "reference") {
        c.reference.clear();
        for (const auto& seg : v) {
          c.reference.push_back({seg.at("start_day").get<double>(), seg.at("value").get<double>()});
        }
      } else if (key == "u_max") c.u_max = v.get<double>();
      else if (key == "output_upper_bound") c.output_upper_bound = v.get<double>();
      else if (key == "soft_penalty") c.soft_penalty = v.get<double>();
      else if (key == "total_days") c.total_days = v.get<double>();
      else if (key == "observer") {
        for (const auto& [k, w] : v.items()) {
          if (k == "state") c.observer.state = w.get<double>();
          else if (k == "disturbance") c.observer.disturbance = w.get<double>();
          else if (k == "measurement") c.observer.measurement = w.get<double>();
          else throw InvalidArgument("scenario: unknown observer key '" + k + "'");
        }
      } else if (key == "filter") {
        for (const auto& [k, w] : v.items()) {
          if (k == "w_low") c.filter_w_low = w.get<double>();
          else if (k == "w_high") c.filter_w_high = w.get<double>();
          else if (k == "stages") c.filter_stages = w.get<int>();
          else throw InvalidArgument("scenario: unknown filter key '" + k + "'");
        }
      } else if (key == "noise_sigma") c.noise_sigma = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "integrator_step") c.integrator_step = v.get<double>();
      else if (key == "tolerances") {
        for (const auto& [k, w] : v.items()) {
          if (k == "offset") c.offset_tolerance = w.get<double>();
          else if (k == "output") c.output_tolerance = w.get<double>();
          else if (k == "settle_window_days") c.settle_window_days = w.get<double>();
          else throw InvalidArgument("scenario: unknown tolerances key '" + k + "'");
        }
      } else {
        throw InvalidArgument("scenario: unknown key '" + key + "'");
      }
    }
    // The plant follows the controller's parameters unless given separately.
    c.plant_pk = plant_given ? pk_from_json(j.at("plant_pk"), c.pk)
                             : (j.contains("pk") ? c.pk : base.plant_pk);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario: ") + e.what());
  }
  c.validate();
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json ref = json::array();
  for (const auto& seg : c.reference) ref.push_back({{"start_day", seg.start_day}, {"value", seg.value}});
  return json{{"name", c.name},
              {"pk", pk_to_json(c.pk)},
              {"plant_pk", pk_to_json(c.plant_pk)},
              {"step", c.step},
              {"memory", c.memory},
              {"horizon", c.horizon},
              {"q_scale", c.q_scale},
              {"r_weight", c.r_weight},
              {"q_weighting", weighting_name(c.q_weighting)},
              {"reference", ref},
              {"u_max", c.u_max},
              {"output_upper_bound", c.output_upper_bound},
              {"soft_penalty", c.soft_penalty},
              {"total_days", c.total_days},
              {"observer",
               {{"state", c.observer.state},
                {"disturbance", c.observer.disturbance},
                {"measurement", c.observer.measurement}}},
              {"filter",
               {{"w_low", c.filter_w_low}, {"w_high", c.filter_w_high}, {"stages", c.filter_stages}}},
              {"noise_sigma", c.noise_sigma},
              {"seed", c.seed},
              {"integrator_step", c.integrator_step},
              {"tolerances",
               {{"offset", c.offset_tolerance},
                {"output", c.output_tolerance},
                {"settle_window_days", c.settle_window_days}}}};
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

bool InvariantReport::offset_free() const {
  return std::all_of(segments.begin(), segments.end(), [](const SegmentCheck& s) { return s.passed; });
}

bool InvariantReport::passed() const {
  return input_bound_violations == 0 && output_bound_violations == 0 &&
         nonzero_slack_steps == 0 && max_target_error <= 1e-9 && offset_free();
}

DiscreteLtiModel control_model(const ScenarioConfig& cfg) {
  return build_pk_model(cfg.pk, cfg.step, cfg.memory);
}

double performance_index(const std::vector<TraceRow>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& row : rows) sum += (row.y - row.r) * (row.y - row.r) + row.u * row.u;
  return sum / static_cast<double>(rows.size());
}

namespace {

MpcConfig controller_config(const ScenarioConfig& cfg, const DiscreteLtiModel& model) {
  const int n = model.augmented_dim();
  MpcConfig mc;
  mc.horizon = cfg.horizon;
  mc.Q = Eigen::MatrixXd::Zero(n, n);
  if (cfg.q_weighting == StateWeighting::kFull) {
    mc.Q.diagonal().setConstant(cfg.q_scale);
  } else {
    mc.Q.diagonal().head(model.block_dim).setConstant(cfg.q_scale);
  }
  mc.R = Eigen::MatrixXd::Constant(1, 1, cfg.r_weight);
  mc.P = solve_dare(model.A, model.B, mc.Q, mc.R).P;
  mc.constraints = input_box_output_upper(model, Eigen::VectorXd::Zero(1),
                                          Eigen::VectorXd::Constant(1, cfg.u_max),
                                          Eigen::VectorXd::Constant(1, cfg.output_upper_bound));
  mc.soft_penalty = cfg.soft_penalty;
  return mc;
}

void check_segments(const ScenarioConfig& cfg, SimulationTrace& trace) {
  for (std::size_t i = 0; i < cfg.reference.size(); ++i) {
    SegmentCheck s;
    s.start_day = cfg.reference[i].start_day;
    s.end_day = i + 1 < cfg.reference.size() ? cfg.reference[i + 1].start_day : cfg.total_days;
    s.reference = cfg.reference[i].value;
    const double from = std::max(s.start_day, s.end_day - cfg.settle_window_days);
    double sum = 0.0;
    int count = 0;
    for (const auto& row : trace.rows) {
      if (row.t + 1e-9 >= from && row.t + 1e-9 < s.end_day) {
        sum += std::abs(row.y - row.r);
        ++count;
      }
    }
    // A segment the run never reached counts as failed.
    s.mean_abs_error = count > 0 ? sum / count : std::numeric_limits<double>::infinity();
    s.passed = count > 0 && s.mean_abs_error <= cfg.offset_tolerance;
    trace.invariants.segments.push_back(s);
  }
}

}  // namespace

SimulationTrace run_closed_loop(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SimulationTrace trace;
  trace.name = cfg.name;
  InvariantReport& inv = trace.invariants;
  inv.min_input = std::numeric_limits<double>::infinity();
  inv.max_input = -std::numeric_limits<double>::infinity();
  inv.max_output = -std::numeric_limits<double>::infinity();

  const int samples = cfg.num_samples();
  trace.rows.reserve(samples);
  double j_sum = 0.0;
  try {
    const DiscreteLtiModel model = control_model(cfg);
    const RankReport rank = check_augmented_observability(model);
    if (!rank.passed()) throw Error("control model fails the augmented observability check");
    MpcController controller(model, controller_config(cfg, model));
    const AugmentedModel aug = augment(model);
    ObserverState observer = design_observer(aug, cfg.observer);
    trace.observer_spectral_radius = observer.spectral_radius;
    TruthPlant plant(cfg.plant_pk,
                     build_oustaloup(cfg.plant_pk.beta(), cfg.filter_w_low, cfg.filter_w_high,
                                     cfg.filter_stages),
                     cfg.integrator_step);
    std::mt19937_64 rng(cfg.seed);

    Eigen::VectorXd y(1), r(1);
    for (int k = 0; k < samples; ++k) {
      const double t = k * cfg.step;
      y(0) = sample_output(plant, cfg.noise_sigma, &rng);
      r(0) = cfg.reference_at(t);
      // Control from the predicted estimate, then correct it with y_k.
      const Eigen::VectorXd d_hat = observer.disturbance_estimate(aug);
      const MpcStep step = controller.step(observer.state_estimate(aug), d_hat, r);
      observer = observer_step(observer, aug, step.u, y);

      TraceRow row;
      row.t = t;
      row.r = r(0);
      row.y = y(0);
      row.u = step.u(0);
      row.a1 = plant.state().a1;
      row.a2 = plant.state().a2;
      row.d_hat = d_hat(0);
      row.a1_hat = observer.xi_hat(0);
      row.slack = step.slack;
      trace.rows.push_back(row);
      j_sum += (row.y - row.r) * (row.y - row.r) + row.u * row.u;

      inv.max_target_error = std::max(
          inv.max_target_error, std::abs((model.C * step.x_bar + model.Cd * d_hat)(0) - r(0)));
      if (row.u < 0.0 || row.u > cfg.u_max) ++inv.input_bound_violations;
      if (row.y > cfg.output_upper_bound + cfg.output_tolerance) ++inv.output_bound_violations;
      if (step.slack > 0.0) ++inv.nonzero_slack_steps;
      inv.max_slack = std::max(inv.max_slack, step.slack);
      inv.min_input = std::min(inv.min_input, row.u);
      inv.max_input = std::max(inv.max_input, row.u);
      inv.max_output = std::max(inv.max_output, row.y);
      trace.qp_iterations += step.qp_iterations;
      trace.max_qp_iterations = std::max(trace.max_qp_iterations, step.qp_iterations);

      plant.step(row.u, cfg.step);
    }
    trace.completed = true;
  } catch (const Error& e) {
    trace.error = e.what();
  }
  trace.J = trace.rows.empty() ? 0.0 : j_sum / static_cast<double>(trace.rows.size());
  check_segments(cfg, trace);
  trace.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

namespace {

void run_cells(const ScenarioConfig& base, std::vector<SweepCell>& cells,
               const std::vector<ScenarioConfig>& configs, int threads) {
  (void)base;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      cells[i].trace = run_closed_loop(configs[i]);
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (n == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
}

double& parameter_ref(PkParameters& p, const std::string& name) {
  if (name == "k10") return p.k10;
  if (name == "k12") return p.k12;
  if (name == "k21") return p.k21;
  if (name == "alpha") return p.alpha;
  throw InvalidArgument("unknown parameter '" + name + "' (expected k10, k12, k21 or alpha)");
}

std::string percent_label(double fraction) {
  std::ostringstream s;
  s << fraction * 100.0;
  return s.str();
}

}  // namespace

std::vector<SweepCell> sensitivity_sweep(const ScenarioConfig& base,
                                         const std::vector<std::string>& parameters,
                                         double fraction, int threads) {
  base.validate();
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("perturbation must be in [0, 1)");
  std::vector<SweepCell> cells;
  std::vector<ScenarioConfig> configs;
  cells.push_back({"nominal", 0, 0.0, {}});
  configs.push_back(base);
  configs.back().name = "nominal";
  for (const auto& name : parameters) {
    for (int dir : {-1, +1}) {
      ScenarioConfig c = base;
      double& value = parameter_ref(c.plant_pk, name);
      value *= 1.0 + dir * fraction;
      c.name = name + (dir < 0 ? "-minus" : "-plus") + percent_label(fraction);
      c.plant_pk.validate();
      cells.push_back({name, dir, value, {}});
      configs.push_back(std::move(c));
    }
  }
  cells.front().value = 0.0;
  run_cells(base, cells, configs, threads);
  return cells;
}

std::vector<SweepCell> memory_sweep(const ScenarioConfig& base, const std::vector<int>& lengths,
                                    int threads) {
  base.validate();
  if (lengths.empty()) throw InvalidArgument("memory sweep needs at least one length");
  std::vector<SweepCell> cells;
  std::vector<ScenarioConfig> configs;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    ScenarioConfig c = base;
    c.memory = lengths[i];
    c.name = "nu-" + std::to_string(lengths[i]);
    // Repeated lengths get distinct file names.
    for (std::size_t k = 0; k < i; ++k) {
      if (lengths[k] == lengths[i]) c.name += "-" + std::to_string(i);
    }
    c.validate();
    cells.push_back({"nu", 0, static_cast<double>(lengths[i]), {}});
    configs.push_back(std::move(c));
  }
  run_cells(base, cells, configs, threads);
  return cells;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void write_csv(const SimulationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "t,r,y,u,A1,A2,dhat\n";
  for (const auto& row : trace.rows) {
    out << format_double(row.t) << ',' << format_double(row.r) << ',' << format_double(row.y)
        << ',' << format_double(row.u) << ',' << format_double(row.a1) << ','
        << format_double(row.a2) << ',' << format_double(row.d_hat) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::string cell_j(const SweepCell& c) {
  if (!c.trace.completed) return "error";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << c.trace.J;
  return s.str();
}

std::string status(const SimulationTrace& t) { return t.ok() ? "ok" : "FAIL"; }

std::string summary_text(const std::vector<SweepCell>& cells, SummaryLayout layout) {
  std::ostringstream s;
  if (layout == SummaryLayout::kParameters) {
    const SweepCell* nominal = nullptr;
    for (const auto& c : cells) {
      if (c.parameter == "nominal") nominal = &c;
    }
    s << std::left << std::setw(12) << "parameter" << std::setw(12) << "-" << std::setw(12) << "+"
      << "status\n";
    if (nominal) {
      s << std::setw(12) << "nominal" << std::setw(24) << cell_j(*nominal) << status(nominal->trace)
        << '\n';
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].direction != -1) continue;
      const SweepCell& minus = cells[i];
      const SweepCell* plus = nullptr;
      for (const auto& c : cells) {
        if (c.parameter == minus.parameter && c.direction == 1) plus = &c;
      }
      s << std::setw(12) << minus.parameter << std::setw(12) << cell_j(minus) << std::setw(12)
        << (plus ? cell_j(*plus) : "-")
        << (minus.trace.ok() && (!plus || plus->trace.ok()) ? "ok" : "FAIL") << '\n';
    }
  } else if (layout == SummaryLayout::kMemory) {
    s << std::left << std::setw(8) << "nu" << std::setw(12) << "J" << "status\n";
    for (const auto& c : cells) {
      s << std::setw(8) << static_cast<int>(c.value) << std::setw(12) << cell_j(c)
        << status(c.trace) << '\n';
    }
  } else {
    s << std::left << std::setw(24) << "run" << std::setw(12) << "J" << "status\n";
    for (const auto& c : cells) {
      s << std::setw(24) << c.trace.name << std::setw(12) << cell_j(c) << status(c.trace) << '\n';
    }
  }
  for (const auto& c : cells) {
    if (!c.trace.error.empty()) s << c.trace.name << ": " << c.trace.error << '\n';
  }
  return s.str();
}

json invariants_json(const InvariantReport& inv) {
  json segs = json::array();
  for (const auto& s : inv.segments) {
    segs.push_back({{"start_day", s.start_day},
                    {"end_day", s.end_day},
                    {"reference", s.reference},
                    {"mean_abs_error", std::isfinite(s.mean_abs_error) ? json(s.mean_abs_error) : json()},
                    {"passed", s.passed}});
  }
  return json{{"input_bound_violations", inv.input_bound_violations},
              {"output_bound_violations", inv.output_bound_violations},
              {"nonzero_slack_steps", inv.nonzero_slack_steps},
              {"max_slack", inv.max_slack},
              {"max_output", inv.max_output},
              {"min_input", inv.min_input},
              {"max_input", inv.max_input},
              {"max_target_error", inv.max_target_error},
              {"segments", segs},
              {"offset_free", inv.offset_free()},
              {"passed", inv.passed()}};
}

}  // namespace

void emit_outputs(const std::vector<SweepCell>& cells, const ScenarioConfig& base,
                  SummaryLayout layout, const std::filesystem::path& dir) {
  if (cells.empty()) throw InvalidArgument("emit_outputs: no traces to write");
  std::filesystem::create_directories(dir);
  json runs = json::array();
  for (const auto& c : cells) {
    const SimulationTrace& t = c.trace;
    const std::string csv = t.name + ".csv";
    write_csv(t, dir / csv);
    runs.push_back({{"name", t.name},
                    {"csv", csv},
                    {"parameter", c.parameter},
                    {"direction", c.direction},
                    {"value", c.value},
                    {"J", t.J},
                    {"rows", t.rows.size()},
                    {"completed", t.completed},
                    {"error", t.error},
                    {"invariants", invariants_json(t.invariants)},
                    {"observer_spectral_radius", t.observer_spectral_radius},
                    {"timing", {{"seconds", t.runtime_seconds},
                                {"qp_iterations", t.qp_iterations},
                                {"max_qp_iterations", t.max_qp_iterations}}},
                    {"passed", t.ok()}});
  }
  const bool all_ok =
      std::all_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.trace.ok(); });
  const json manifest{{"config", scenario_to_json(base)}, {"runs", runs}, {"passed", all_ok}};
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  std::ofstream out(dir / "summary.txt", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "summary.txt").string());
  out << summary_text(cells, layout);
}

}  // namespace fomc
