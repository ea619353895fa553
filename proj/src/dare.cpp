#include "fomc/dare.hpp"

#include "fomc/errors.hpp"
#include "fomc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace fomc {

namespace {

double inf_norm(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// One application of the Riccati map P -> A'PA - A'PB(B'PB+R)^{-1}B'PA + Q.
Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd pa = P * A;
  const Eigen::MatrixXd bpa = B.transpose() * pa;
  const Eigen::MatrixXd s = B.transpose() * P * B + R;
  return symmetrize(A.transpose() * pa - bpa.transpose() * s.ldlt().solve(bpa) + Q);
}

void check_inputs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m) {
    throw InvalidArgument("solve_dare: inconsistent matrix dimensions");
  }
  if (linalg::max_abs(Q - Q.transpose()) > 1e-10 * std::max(1.0, linalg::max_abs(Q))) {
    throw InvalidArgument("solve_dare: Q must be symmetric");
  }
  if (linalg::max_abs(R - R.transpose()) > 1e-10 * std::max(1.0, linalg::max_abs(R))) {
    throw InvalidArgument("solve_dare: R must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> rllt(R);
  if (m > 0 && rllt.info() != Eigen::Success) {
    throw InvalidArgument("solve_dare: R must be positive definite");
  }
  if (n == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qes(symmetrize(Q));
  const double qscale = std::max(1.0, qes.eigenvalues().cwiseAbs().maxCoeff());
  if (qes.eigenvalues().minCoeff() < -1e-10 * qscale) {
    throw InvalidArgument("solve_dare: Q must be positive semidefinite");
  }
  if (!linalg::is_stabilizable(A, B)) {
    throw InvalidArgument("solve_dare: (A, B) is not stabilizable");
  }
  const Eigen::VectorXd lam = qes.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd qhalf =
      lam.cwiseSqrt().asDiagonal() * qes.eigenvectors().transpose();
  if (!linalg::is_detectable(A, qhalf)) {
    throw InvalidArgument("solve_dare: (A, Q^{1/2}) is not detectable");
  }
}

}  // namespace

Eigen::MatrixXd dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              const Eigen::MatrixXd& P) {
  return P - riccati_map(A, B, Q, R, P);
}

RiccatiSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           const DareOptions& options) {
  check_inputs(A, B, Q, R);
  const auto n = A.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> history;

  RiccatiSolution sol;
  Eigen::MatrixXd P;
  bool doubled = false;
  {
    Eigen::MatrixXd ak = A;
    Eigen::MatrixXd gk = B.cols() > 0 ? Eigen::MatrixXd(B * R.llt().solve(B.transpose()))
                                      : Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd hk = Q;
    constexpr int kMaxDoublings = 100;
    for (int it = 0; it < kMaxDoublings; ++it) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(eye + gk * hk);
      const Eigen::MatrixXd w_a = lu.solve(ak);   // (I + G H)^{-1} A
      const Eigen::MatrixXd w_g = lu.solve(gk);   // (I + G H)^{-1} G
      const Eigen::MatrixXd h_next = symmetrize(hk + ak.transpose() * hk * w_a);
      gk = symmetrize(gk + ak * w_g * ak.transpose());
      ak = ak * w_a;
      ++sol.iterations;
      if (!h_next.allFinite()) break;
      const double change = inf_norm(h_next - hk);
      hk = h_next;
      history.push_back(change);
      if (change <= 1e-15 * std::max(1.0, inf_norm(hk)) || ak.isZero(0.0)) {
        doubled = true;
        break;
      }
    }
    P = hk;
  }

  if (!doubled || !P.allFinite()) P = Q;

  // Fixed-point polish (or full fallback when doubling stalled).
  double residual = inf_norm(dare_residual(A, B, Q, R, P));
  history.push_back(residual);
  int fixed_steps = 0;
  const int cap = doubled ? 50 : options.max_iterations;
  while (residual > 0.1 * options.tolerance && fixed_steps < cap) {
    Eigen::MatrixXd next = riccati_map(A, B, Q, R, P);
    const double next_res = inf_norm(dare_residual(A, B, Q, R, next));
    ++fixed_steps;
    history.push_back(next_res);
    if (doubled && next_res >= residual) break;
    P = std::move(next);
    residual = next_res;
  }
  sol.iterations += fixed_steps;

  if (!(residual <= options.tolerance)) {
    throw ConvergenceFailure("solve_dare: residual " + std::to_string(residual) +
                                 " above tolerance",
                             std::move(history));
  }
  sol.P = P;
  sol.residual_norm = residual;
  if (B.cols() > 0) {
    const Eigen::MatrixXd s = B.transpose() * P * B + R;
    sol.K = s.ldlt().solve(B.transpose() * P * A);
  } else {
    sol.K = Eigen::MatrixXd::Zero(0, n);
  }
  sol.closed_loop_radius = linalg::spectral_radius(A - B * sol.K);
  if (!(sol.closed_loop_radius < 1.0)) {
    throw ConvergenceFailure("solve_dare: solution is not stabilizing",
                             std::move(history));
  }
  return sol;
}

ObserverGain observer_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                           const Eigen::MatrixXd& W, const Eigen::MatrixXd& V) {
  if (!linalg::is_detectable(A, C)) {
    throw InvalidArgument("observer_gain: (C, A) is not detectable");
  }
  const RiccatiSolution dual = solve_dare(A.transpose(), C.transpose(), W, V);
  ObserverGain g;
  g.Sigma = dual.P;
  g.L = -dual.K.transpose();
  g.spectral_radius = linalg::spectral_radius(A + g.L * C);
  return g;
}

}  // namespace fomc
