#include "fomc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <limits>

namespace fomc::linalg {

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

int observability_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                       double rel_tol) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd basis(n, 0);
  // Candidates: columns of C' first, then A' applied to accepted directions.
  Eigen::MatrixXd pending = c.transpose();
  while (pending.cols() > 0 && basis.cols() < n) {
    Eigen::MatrixXd accepted(n, 0);
    for (Eigen::Index j = 0; j < pending.cols(); ++j) {
      Eigen::VectorXd v = pending.col(j);
      const double norm0 = v.norm();
      if (norm0 == 0.0) continue;
      // Two passes of classical Gram-Schmidt.
      for (int pass = 0; pass < 2; ++pass) {
        if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
      }
      const double norm1 = v.norm();
      if (norm1 <= rel_tol * norm0) continue;
      v /= norm1;
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v;
      accepted.conservativeResize(Eigen::NoChange, accepted.cols() + 1);
      accepted.col(accepted.cols() - 1) = v;
      if (basis.cols() == n) break;
    }
    pending = a.transpose() * accepted;
  }
  return static_cast<int>(basis.cols());
}

namespace {

// rank of [A - lambda I; C] (stacked) for every eigenvalue with |lambda| >= 1 - margin.
bool pbh_full_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double margin) {
  const Eigen::Index n = a.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  const Eigen::VectorXcd lambdas = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const std::complex<double> lambda = lambdas(i);
    if (std::abs(lambda) < 1.0 - margin) continue;
    Eigen::MatrixXcd stacked(n + c.rows(), n);
    stacked.topRows(n) = a.cast<std::complex<double>>();
    stacked.topRows(n).diagonal().array() -= lambda;
    stacked.bottomRows(c.rows()) = c.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked);
    const auto& s = svd.singularValues();
    const double scale = std::max(1.0, s(0));
    if (s(s.size() - 1) <= 1e-8 * scale) return false;
  }
  return true;
}

}  // namespace

bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double margin) {
  return pbh_full_rank(a.transpose(), b.transpose(), margin);
}

bool is_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double margin) {
  return pbh_full_rank(a, c, margin);
}

}  // namespace fomc::linalg
