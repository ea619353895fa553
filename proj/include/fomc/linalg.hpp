#pragma once

#include <Eigen/Dense>

namespace fomc::linalg {

/// Number of singular values above rel_tol * (largest singular value).
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-8);

double spectral_radius(const Eigen::MatrixXd& a);

/// 2-norm condition number via SVD (infinity for singular matrices).
double condition_number(const Eigen::MatrixXd& m);

/// Dimension of the observable subspace of (C, A). Uses an orthogonalized
/// block Krylov sequence on (A', C') so that decaying powers of a stable A
/// do not masquerade as rank loss.
int observability_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                       double rel_tol = 1e-8);

/// PBH test on every eigenvalue with modulus >= 1 - margin.
bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double margin = 1e-9);
bool is_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double margin = 1e-9);

/// Entrywise maximum absolute value.
inline double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace fomc::linalg
