#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "fomc/errors.hpp"
#include "fomc/model_builder.hpp"
#include "fomc/qp.hpp"

namespace fomc {

/// Stage constraints F_x x + F_u u <= f, applied at j = 0..N-1. Rows with
/// soft[i] set are relaxed by a shared scalar slack s >= 0.
struct StageConstraints {
  Eigen::MatrixXd Fx;
  Eigen::MatrixXd Fu;
  Eigen::VectorXd f;
  std::vector<bool> soft;

  int rows() const { return static_cast<int>(f.size()); }
  bool any_soft() const;
};

/// Hard box on the input plus a soft upper bound on the output C x.
StageConstraints input_box_output_upper(const DiscreteLtiModel& model,
                                        const Eigen::VectorXd& u_min,
                                        const Eigen::VectorXd& u_max,
                                        std::optional<Eigen::VectorXd> y_max);

struct MpcConfig {
  int horizon = 1;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd P;
  StageConstraints constraints;
  /// Weight rho of the rho * s^2 slack penalty.
  double soft_penalty = 1e6;
};

/// (x_bar; u_bar) = W (d_hat; r).
struct TargetMap {
  Eigen::MatrixXd W;
  double condition_number = 0.0;
  /// Max-abs residual of [[A-I, B], [C, 0]] W - [[-G, 0], [-C_d, I]].
  double residual = 0.0;
  int state_dim = 0;

  Eigen::VectorXd x_bar(const Eigen::VectorXd& d_hat, const Eigen::VectorXd& r) const;
  Eigen::VectorXd u_bar(const Eigen::VectorXd& d_hat, const Eigen::VectorXd& r) const;
};

/// Throws SingularMatrix when the target system is singular (transmission
/// zero at 1), or Error when a non-square system leaves a residual > 1e-6.
TargetMap build_target_map(const DiscreteLtiModel& model);

/// The condensed problem over z = (u_0, ..., u_{N-1}[, s]) with the states
/// eliminated through x_{j+1} = A x_j + B u_j + G d_hat. Uncached; the
/// controller below keeps the constant parts between steps.
QuadraticProgram build_condensed_qp(const MpcConfig& cfg, const DiscreteLtiModel& model,
                                    const Eigen::VectorXd& x_hat, const Eigen::VectorXd& d_hat,
                                    const Eigen::VectorXd& x_bar, const Eigen::VectorXd& u_bar);

namespace detail {

// Horizon-invariant pieces of the condensed problem.
struct CondensedCache {
  int horizon = 0;
  int num_inputs = 0;
  int num_vars = 0;
  bool has_slack = false;
  // x_j = Phi_j x0 + Gamma_j U + Psi_j d, stacked for j = 0..N.
  Eigen::MatrixXd phi, gamma, psi;
  Eigen::MatrixXd gamma_t_qbar;  // Gamma' Qbar
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd g_ineq;
  // rhs = f_stacked - fx_phi x0 - fx_psi d
  Eigen::MatrixXd fx_phi, fx_psi;
  Eigen::VectorXd f_stacked;

  CondensedCache(const DiscreteLtiModel& model, const MpcConfig& cfg);
  QuadraticProgram assemble(const MpcConfig& cfg, const Eigen::VectorXd& x_hat,
                            const Eigen::VectorXd& d_hat, const Eigen::VectorXd& x_bar,
                            const Eigen::VectorXd& u_bar) const;
};

}  // namespace detail

/// QP infeasible even with the slack. Carries the controller inputs.
class MpcInfeasible : public Error {
 public:
  MpcInfeasible(const std::string& what, Eigen::VectorXd x, Eigen::VectorXd d,
                Eigen::VectorXd ref)
      : Error(what), x_hat(std::move(x)), d_hat(std::move(d)), r(std::move(ref)) {}
  Eigen::VectorXd x_hat;
  Eigen::VectorXd d_hat;
  Eigen::VectorXd r;
};

struct MpcStep {
  Eigen::VectorXd u;
  Eigen::VectorXd x_bar;
  Eigen::VectorXd u_bar;
  double slack = 0.0;
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  /// V_N at the optimum.
  double cost = 0.0;
};

/// Receding-horizon offset-free tracking controller. Not thread-safe; use
/// one instance per closed-loop run.
class MpcController {
 public:
  MpcController(DiscreteLtiModel model, MpcConfig cfg);

  /// Solves the horizon problem and returns the first input. The optimal
  /// sequence, shifted by one step, warm-starts the next call.
  MpcStep step(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& d_hat,
               const Eigen::VectorXd& r);

  const TargetMap& target_map() const { return target_; }
  const MpcConfig& config() const { return cfg_; }
  const DiscreteLtiModel& model() const { return model_; }
  void reset_warm_start() { warm_.reset(); }

  /// Condensed QP for the given data, using the cached matrices.
  QuadraticProgram condensed_qp(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& d_hat,
                                const Eigen::VectorXd& x_bar,
                                const Eigen::VectorXd& u_bar) const;

 private:
  DiscreteLtiModel model_;
  MpcConfig cfg_;
  TargetMap target_;
  detail::CondensedCache cache_;
  ActiveSetSolver solver_;
  Eigen::VectorXd u_lower_, u_upper_;
  std::optional<Eigen::VectorXd> warm_;
};

}  // namespace fomc
