#pragma once

#include <Eigen/Dense>

#include <random>

#include "fomc/model_builder.hpp"
#include "fomc/qp.hpp"

namespace fomc::testing {

// x+ = A x + B u + G d, y = C x (+ Cd d). No history blocks.
inline DiscreteLtiModel make_lti(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd G,
                                 Eigen::MatrixXd C, Eigen::MatrixXd Cd = {}) {
  DiscreteLtiModel m;
  m.A = std::move(A);
  m.B = std::move(B);
  m.G = std::move(G);
  m.C = std::move(C);
  m.Cd = Cd.size() ? std::move(Cd) : Eigen::MatrixXd::Zero(m.C.rows(), m.G.cols());
  m.step = 1.0;
  m.block_dim = static_cast<int>(m.A.rows());
  m.state_blocks = 1;
  return m;
}

inline DiscreteLtiModel scalar_lti(double a, double b, double g, double c) {
  return make_lti(Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b),
                  Eigen::MatrixXd::Constant(1, 1, g), Eigen::MatrixXd::Constant(1, 1, c));
}

// Random system with spectral radius `radius`, one input, one output, G = B.
inline DiscreteLtiModel random_stable(std::mt19937& rng, int n, double radius) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(n, n), B(n, 1), C(1, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
    B(i, 0) = nd(rng);
    C(0, i) = nd(rng);
  }
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  A *= radius / rho;
  return make_lti(A, B, B, C);
}

struct RandomQp {
  QuadraticProgram qp;
  Eigen::VectorXd interior;  // strictly feasible point
};

// Strictly convex QP with 1-6 variables and 0-10 inequality rows, feasible by
// construction.
inline RandomQp random_qp(std::mt19937& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> dd(1, 6), qq(0, 10);
  std::uniform_real_distribution<double> margin(0.1, 1.0);
  const int d = dd(rng), q = qq(rng);
  Eigen::MatrixXd M(d, d), G(q, d);
  Eigen::VectorXd f(d), zf(d), g(q);
  for (int i = 0; i < M.size(); ++i) M.data()[i] = n01(rng);
  for (int i = 0; i < G.size(); ++i) G.data()[i] = n01(rng);
  for (int i = 0; i < d; ++i) f(i) = 3.0 * n01(rng);
  for (int i = 0; i < d; ++i) zf(i) = n01(rng);
  for (int i = 0; i < q; ++i) g(i) = G.row(i).dot(zf) + margin(rng);
  RandomQp r;
  r.qp.H = M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(d, d);
  r.qp.f = f;
  r.qp.G = G;
  r.qp.g = g;
  r.qp.Aeq = Eigen::MatrixXd::Zero(0, d);
  r.qp.beq = Eigen::VectorXd::Zero(0);
  r.interior = zf;
  return r;
}

}  // namespace fomc::testing
