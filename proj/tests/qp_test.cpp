#include "fomc/qp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fomc/errors.hpp"
#include "test_models.hpp"
#include "oracles.hpp"

namespace fomc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

QuadraticProgram make(const MatrixXd& H, const VectorXd& f, const MatrixXd& G,
                      const VectorXd& g) {
  QuadraticProgram qp;
  qp.H = H;
  qp.f = f;
  qp.G = G;
  qp.g = g;
  qp.Aeq = MatrixXd::Zero(0, f.size());
  qp.beq = VectorXd::Zero(0);
  return qp;
}

TEST(SolveQp, SingleActiveConstraint) {
  // (z - 1)^2 = z^2 - 2z + 1, z <= 0.
  const QuadraticProgram qp = make(MatrixXd::Constant(1, 1, 2.0), VectorXd::Constant(1, -2.0),
                                   MatrixXd::Ones(1, 1), VectorXd::Zero(1));
  const QpSolution s = solve_qp(qp);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 0.0, 1e-12);
  EXPECT_NEAR(s.objective + 1.0, 1.0, 1e-12);
  EXPECT_NEAR(s.lambda(0), 2.0, 1e-12);
  EXPECT_LE(s.kkt_residual, 1e-8);
}

TEST(SolveQp, Unconstrained) {
  const QuadraticProgram qp = make(2.0 * MatrixXd::Identity(2, 2), Eigen::Vector2d(-2, -4),
                                   MatrixXd::Zero(0, 2), VectorXd::Zero(0));
  const QpSolution s = solve_qp(qp);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.0, 1e-12);
  EXPECT_NEAR(s.z(1), 2.0, 1e-12);
}

TEST(SolveQp, HalfPlaneMatchesGridSearch) {
  // min z1^2 + z2^2 s.t. z1 + z2 >= 1.
  const QuadraticProgram qp = make(2.0 * MatrixXd::Identity(2, 2), VectorXd::Zero(2),
                                   -MatrixXd::Ones(1, 2), VectorXd::Constant(1, -1.0));
  double best = INFINITY, bx = 0, by = 0;
  for (int i = 0; i <= 4000; ++i) {
    for (int j = 0; j <= 4000; ++j) {
      const double x = -2.0 + 1e-3 * i, y = -2.0 + 1e-3 * j;
      if (x + y < 1.0 - 1e-12) continue;
      const double v = x * x + y * y;
      if (v < best) {
        best = v;
        bx = x;
        by = y;
      }
    }
  }
  const QpSolution s = solve_qp(qp);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), bx, 1e-3);
  EXPECT_NEAR(s.z(1), by, 1e-3);
  EXPECT_NEAR(s.objective, best, 1e-3);
  EXPECT_NEAR(s.z(0), 0.5, 1e-12);
  EXPECT_NEAR(s.z(1), 0.5, 1e-12);
  EXPECT_NEAR(s.objective, 0.5, 1e-12);
}

TEST(SolveQp, InfeasibleDetected) {
  MatrixXd G(2, 1);
  G << 1.0, -1.0;
  const QuadraticProgram qp =
      make(MatrixXd::Identity(1, 1), VectorXd::Zero(1), G, Eigen::Vector2d(-1.0, -1.0));
  EXPECT_EQ(solve_qp(qp).status, QpStatus::kInfeasible);
}

TEST(SolveQp, EqualityConstraints) {
  // min |z|^2 s.t. z1 + z2 + z3 = 3, z3 <= 0.5.
  QuadraticProgram qp = make(2.0 * MatrixXd::Identity(3, 3), VectorXd::Zero(3),
                             (MatrixXd(1, 3) << 0, 0, 1).finished(), VectorXd::Constant(1, 0.5));
  qp.Aeq = MatrixXd::Ones(1, 3);
  qp.beq = VectorXd::Constant(1, 3.0);
  const QpSolution s = solve_qp(qp);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.25, 1e-12);
  EXPECT_NEAR(s.z(1), 1.25, 1e-12);
  EXPECT_NEAR(s.z(2), 0.5, 1e-12);
  EXPECT_LE(s.kkt_residual, 1e-8);
  // Duplicated equality row is tolerated; inconsistent one is infeasible.
  qp.Aeq = MatrixXd::Ones(2, 3);
  qp.beq = VectorXd::Constant(2, 3.0);
  EXPECT_EQ(solve_qp(qp).status, QpStatus::kOptimal);
  qp.beq(1) = 4.0;
  EXPECT_EQ(solve_qp(qp).status, QpStatus::kInfeasible);
}

TEST(SolveQp, LinearProgramAndUnbounded) {
  // min -z1 - z2 over the unit box: a pure LP with zero Hessian.
  MatrixXd G(4, 2);
  G << 1, 0, 0, 1, -1, 0, 0, -1;
  VectorXd g(4);
  g << 1, 1, 0, 0;
  QuadraticProgram qp = make(MatrixXd::Zero(2, 2), Eigen::Vector2d(-1, -1), G, g);
  const QpSolution s = solve_qp(qp);
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.0, 1e-12);
  EXPECT_NEAR(s.z(1), 1.0, 1e-12);
  qp.G = G.bottomRows(2);
  qp.g = g.tail(2);
  EXPECT_EQ(solve_qp(qp).status, QpStatus::kUnbounded);
}

TEST(SolveQp, PhaseOneFromInfeasibleWarmStart) {
  MatrixXd G(3, 2);
  G << -1, 0, 0, -1, 1, 1;
  VectorXd g(3);
  g << -1, -1, 3;
  const QuadraticProgram qp = make(MatrixXd::Identity(2, 2), VectorXd::Zero(2), G, g);
  const QpSolution s = solve_qp(qp, Eigen::Vector2d(-5.0, 10.0));
  ASSERT_EQ(s.status, QpStatus::kOptimal);
  EXPECT_NEAR(s.z(0), 1.0, 1e-12);
  EXPECT_NEAR(s.z(1), 1.0, 1e-12);
}

TEST(SolveQp, RejectsMalformedProblems) {
  QuadraticProgram qp = make(MatrixXd::Identity(2, 2), VectorXd::Zero(3), MatrixXd::Zero(0, 3),
                             VectorXd::Zero(0));
  EXPECT_THROW(solve_qp(qp), InvalidArgument);
  MatrixXd asym(2, 2);
  asym << 1, 1, 0, 1;
  qp = make(asym, VectorXd::Zero(2), MatrixXd::Zero(0, 2), VectorXd::Zero(0));
  EXPECT_THROW(solve_qp(qp), InvalidArgument);
}

using testing::random_qp;
using testing::RandomQp;

// The full 200-problem cross-check lives in the acceptance suite; this is a
// quicker smoke version with the same oracle.
TEST(SolveQp, RandomProblemsMatchDualProjectedGradient) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const RandomQp r = random_qp(rng);
    const QpSolution s = solve_qp(r.qp);
    ASSERT_EQ(s.status, QpStatus::kOptimal) << trial;
    EXPECT_LE(s.kkt_residual, 1e-8) << trial;
    const VectorXd zref = oracle::dual_projected_gradient(r.qp.H, r.qp.f, r.qp.G, r.qp.g);
    const double ref = r.qp.objective(zref);
    EXPECT_LE(std::abs(s.objective - ref), 1e-6 * std::max(1.0, std::abs(ref))) << trial;
  }
}

TEST(SolveQp, WarmStartDoesNotChangeOptimum) {
  std::mt19937 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomQp r = random_qp(rng);
    const QpSolution cold = solve_qp(r.qp);
    VectorXd warm = r.interior;
    for (int i = 0; i < warm.size(); ++i) warm(i) += 2.0 * n01(rng);  // maybe infeasible
    const QpSolution hot = solve_qp(r.qp, warm);
    ASSERT_EQ(hot.status, QpStatus::kOptimal);
    EXPECT_LE(std::abs(hot.objective - cold.objective), 1e-8 * std::max(1.0, std::abs(cold.objective)));
    const QpSolution again = solve_qp(r.qp, cold.z);
    EXPECT_EQ(again.z, cold.z);
  }
}

TEST(SolveQp, Deterministic) {
  std::mt19937 rng(5);
  const RandomQp r = random_qp(rng);
  const QpSolution a = solve_qp(r.qp);
  const QpSolution b = solve_qp(r.qp);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(DumpQp, WritesJson) {
  std::ostringstream os;
  dump_qp(make(MatrixXd::Identity(1, 1), VectorXd::Ones(1), MatrixXd::Ones(1, 1),
               VectorXd::Zero(1)),
          os);
  EXPECT_NE(os.str().find("\"H\""), std::string::npos);
  EXPECT_NE(os.str().find("\"rows\": 1"), std::string::npos);
}

}  // namespace
}  // namespace fomc
