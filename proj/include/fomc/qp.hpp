#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fomc {

/// minimize 1/2 z'Hz + f'z  subject to  G z <= g,  Aeq z = beq.
struct QuadraticProgram {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;

  int dim() const { return static_cast<int>(f.size()); }
  int num_inequalities() const { return static_cast<int>(g.size()); }
  int num_equalities() const { return static_cast<int>(beq.size()); }
  double objective(const Eigen::VectorXd& z) const {
    return 0.5 * z.dot(H * z) + f.dot(z);
  }
  /// Throws InvalidArgument on shape mismatch or an asymmetric H.
  void validate() const;
};

enum class QpStatus { kOptimal, kInfeasible, kUnbounded, kMaxIterations };

std::string to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  QpStatus status = QpStatus::kMaxIterations;
  /// Max of stationarity, primal feasibility, dual feasibility and
  /// complementarity violations.
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Inequality multipliers (zero off the active set).
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  std::vector<int> active_set;
};

struct QpOptions {
  int max_iterations = 2000;
  double feasibility_tolerance = 1e-9;
};

/// Dense primal active-set solver with a Phase-I feasibility stage.
///
/// Works for convex H (PSD); zero-curvature directions are followed to the
/// next blocking constraint. Ties in the ratio test go to the lowest
/// constraint index. Holds a workspace, so use one instance per thread.
class ActiveSetSolver {
 public:
  explicit ActiveSetSolver(QpOptions options = {}) : options_(options) {}

  QpSolution solve(const QuadraticProgram& qp,
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

 private:
  struct Working;
  QpStatus minimize_from_feasible(const QuadraticProgram& qp, Eigen::VectorXd& z,
                                  std::vector<int>& active, int& iterations,
                                  Eigen::VectorXd& lambda, Eigen::VectorXd& mu,
                                  bool stop_at_zero_last);

  QpOptions options_;
  Eigen::MatrixXd basis_;
};

inline QpSolution solve_qp(const QuadraticProgram& qp,
                           const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
  ActiveSetSolver solver;
  return solver.solve(qp, warm_start);
}

/// KKT residual of (z, lambda, mu) for the given problem.
double kkt_residual(const QuadraticProgram& qp, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu);

/// Writes the problem as JSON, for offline debugging.
void dump_qp(const QuadraticProgram& qp, std::ostream& os);

}  // namespace fomc
