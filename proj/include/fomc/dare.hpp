#pragma once

#include <Eigen/Dense>

namespace fomc {

struct RiccatiSolution {
  Eigen::MatrixXd P;
  /// K = (B'PB + R)^{-1} B'PA, so that u = -Kx is the LQR law.
  Eigen::MatrixXd K;
  /// ||P - (A'PA - A'PB(B'PB+R)^{-1}B'PA + Q)||_inf.
  double residual_norm = 0.0;
  int iterations = 0;
  /// Spectral radius of A - BK.
  double closed_loop_radius = 0.0;
};

struct DareOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
};

/// Stabilizing solution of P = A'PA - A'PB(B'PB+R)^{-1}B'PA + Q.
///
/// Runs the structured doubling iteration, then polishes with plain
/// fixed-point steps; if doubling stalls it falls back to fixed-point
/// iteration from P = Q. Throws InvalidArgument when (A, B) is not
/// stabilizable, (A, Q^{1/2}) is not detectable, Q is not PSD or R is not PD,
/// and ConvergenceFailure (with the residual history) on non-convergence.
RiccatiSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                           const DareOptions& options = {});

/// Residual matrix of the Riccati equation at P.
Eigen::MatrixXd dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              const Eigen::MatrixXd& P);

struct ObserverGain {
  /// Observer gain; the error dynamics are A + L C.
  Eigen::MatrixXd L;
  /// Stationary error covariance from the dual Riccati equation.
  Eigen::MatrixXd Sigma;
  double spectral_radius = 0.0;
};

/// LQG (steady-state Kalman predictor) gain L = -A Sigma C'(C Sigma C' + V)^{-1},
/// with Sigma from the dual DARE on (A', C', W, V). Throws InvalidArgument if
/// (C, A) is not detectable.
ObserverGain observer_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                           const Eigen::MatrixXd& W, const Eigen::MatrixXd& V);

}  // namespace fomc
