#include "fomc/plant.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

#include "fomc/errors.hpp"
#include "fomc/mpc.hpp"

namespace fomc {
namespace {

constexpr double kBeta = 1.0 - 0.587;

OustaloupFilter nominal_filter() { return build_oustaloup(kBeta, 1e-2, 1e3, 8); }

TEST(Oustaloup, PolesAndZerosInterlaceInsideBand) {
  const OustaloupFilter f = nominal_filter();
  ASSERT_EQ(f.zeros.size(), 8);
  for (int k = 0; k < 8; ++k) {
    EXPECT_GT(f.zeros(k), 1e-2);
    EXPECT_LT(f.poles(k), 1e3);
    EXPECT_LT(f.zeros(k), f.poles(k));
    if (k + 1 < 8) EXPECT_LT(f.poles(k), f.zeros(k + 1));
  }
  EXPECT_NEAR(f.gain, std::pow(1e3, kBeta), 1e-12);
  EXPECT_EQ(f.A.rows(), 8);
  EXPECT_LT(f.A.eigenvalues().real().maxCoeff(), 0.0);
}

TEST(Oustaloup, MagnitudeAndPhaseTrackPowerLaw) {
  const OustaloupFilter f = nominal_filter();
  for (int i = 0; i < 20; ++i) {
    const double w = std::pow(10.0, -1.0 + 3.0 * i / 19.0);
    const std::complex<double> h = f.response(w);
    EXPECT_LE(std::abs(std::abs(h) / std::pow(w, kBeta) - 1.0), 0.05) << w;
    EXPECT_LE(std::abs(std::abs(f.state_space_response(w) - h)) / std::abs(h), 1e-9) << w;
  }
  const double phase = std::arg(f.response(std::sqrt(1e-2 * 1e3))) * 180.0 / std::numbers::pi;
  EXPECT_NEAR(phase, kBeta * 90.0, 3.0);
}

TEST(Oustaloup, VanishingOrderIsUnity) {
  const OustaloupFilter f = build_oustaloup(1e-6, 1e-2, 1e3, 8);
  for (int i = 0; i < 20; ++i) {
    const double w = std::pow(10.0, -2.0 + 5.0 * i / 19.0);
    EXPECT_LE(std::abs(std::abs(f.response(w)) - 1.0), 1e-4);
  }
}

TEST(Oustaloup, RejectsBadParameters) {
  EXPECT_THROW(build_oustaloup(0.0, 1e-2, 1e3, 8), InvalidArgument);
  EXPECT_THROW(build_oustaloup(1.0, 1e-2, 1e3, 8), InvalidArgument);
  EXPECT_THROW(build_oustaloup(0.5, 1e3, 1e-2, 8), InvalidArgument);
  EXPECT_THROW(build_oustaloup(0.5, 1e-2, 1e3, 0), InvalidArgument);
}

TEST(TruthPlant, ZeroInputStaysAtOrigin) {
  TruthPlant p(PkParameters{}, nominal_filter());
  for (int k = 0; k < 50; ++k) p.step(0.0, 0.1);
  EXPECT_EQ(p.state().a1, 0.0);
  EXPECT_EQ(p.state().a2, 0.0);
  EXPECT_TRUE(p.state().z.isZero(0.0));
  EXPECT_EQ(sample_output(p), 0.0);
}

TEST(TruthPlant, MassBalance) {
  TruthPlant p(PkParameters{}, nominal_filter());
  for (int k = 0; k < 300; ++k) {
    const double before = p.state().a1 + p.state().a2 + p.state().eliminated - p.state().administered;
    p.step(k % 40 < 10 ? 1.5 : 0.0, 0.1);
    const double after = p.state().a1 + p.state().a2 + p.state().eliminated - p.state().administered;
    EXPECT_NEAR(after, before, 1e-8);
  }
}

TEST(TruthPlant, Rk4Converges) {
  TruthPlant coarse(PkParameters{}, nominal_filter(), 1e-3);
  TruthPlant fine(PkParameters{}, nominal_filter(), 5e-4);
  for (int k = 0; k < 1500; ++k) {
    const double u = k < 800 ? 0.75 : 1.5;
    coarse.step(u, 0.1);
    fine.step(u, 0.1);
  }
  EXPECT_LE(std::abs(coarse.state().a1 - fine.state().a1), 1e-7);
  EXPECT_LE(std::abs(coarse.state().a2 - fine.state().a2), 1e-7);
}

TEST(TruthPlant, ConstantTargetInputApproachesReference) {
  const PkParameters pk;
  const TargetMap t = build_target_map(build_pk_model(pk, 0.1, 25));
  const double u_bar = t.u_bar(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.5))(0);
  TruthPlant p(pk, nominal_filter());
  double last = 0.0;
  for (int k = 0; k < 30000; ++k) {
    p.step(u_bar, 0.1);
    if (k % 1000 == 999) {
      EXPECT_GE(p.state().a1, last - 1e-12);  // monotone approach from below
      last = p.state().a1;
    }
    if (k == 1499) EXPECT_NEAR(p.state().a1, 0.5, 0.05);
  }
  EXPECT_NEAR(p.state().a1, 0.5, 0.01);
}

TEST(TruthPlant, ShortStepIsContinuous) {
  TruthPlant p(PkParameters{}, nominal_filter());
  p.step(1.0, 0.5);
  const double before = sample_output(p);
  p.step(0.0, 1e-9);
  EXPECT_NEAR(sample_output(p), before, 1e-8);
}

TEST(TruthPlant, RejectsBadInput) {
  TruthPlant p(PkParameters{}, nominal_filter());
  EXPECT_THROW(p.step(-1.0, 0.1), InvalidArgument);
  EXPECT_THROW(p.step(std::nan(""), 0.1), InvalidArgument);
  EXPECT_THROW(p.step(1.0, 0.0), InvalidArgument);
}

TEST(SampleOutput, NoiseMeanIsUnbiased) {
  TruthPlant p(PkParameters{}, nominal_filter());
  p.step(1.0, 2.0);
  std::mt19937_64 rng(42);
  const double sigma = 0.01;
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += sample_output(p, sigma, &rng);
  EXPECT_NEAR(sum / 10000.0, p.state().a1, 3.0 * sigma / 100.0);
}

}  // namespace
}  // namespace fomc
