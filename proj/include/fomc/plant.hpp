#pragma once

#include <Eigen/Dense>

#include <complex>
#include <random>

#include "fomc/model_builder.hpp"

namespace fomc {

/// Oustaloup approximation of s^beta on [w_low, w_high]:
/// H(s) = gain * prod (s + z_k) / (s + p_k), k = 1..N_f.
struct OustaloupFilter {
  double order = 0.0;
  double w_low = 0.0;
  double w_high = 0.0;
  int stages = 0;
  Eigen::VectorXd zeros;  // corner frequencies, rad/day (the roots are -zeros)
  Eigen::VectorXd poles;
  double gain = 0.0;
  // Controllable-canonical realization.
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D = 0.0;

  /// Evaluated from the pole-zero form.
  std::complex<double> response(double w) const;
  /// Evaluated from (A, B, C, D).
  std::complex<double> state_space_response(double w) const;
};

OustaloupFilter build_oustaloup(double order, double w_low, double w_high, int stages);

struct PlantState {
  double a1 = 0.0;
  double a2 = 0.0;
  Eigen::VectorXd z;
  double time = 0.0;
  /// Running integrals of k10 A1 and u; A1 + A2 + eliminated - administered
  /// is conserved.
  double eliminated = 0.0;
  double administered = 0.0;
};

class TruthPlant {
 public:
  TruthPlant(PkParameters pk, OustaloupFilter filter, double integrator_step = 1e-3);

  /// Integrates over `duration` with u held constant. Throws on non-finite
  /// state or a compartment below -1e-9; the state is left at the last
  /// valid substep.
  void step(double u, double duration);

  const PlantState& state() const { return state_; }
  void set_state(PlantState s) { state_ = std::move(s); }
  const PkParameters& parameters() const { return pk_; }
  const OustaloupFilter& filter() const { return filter_; }
  double integrator_step() const { return integrator_step_; }

 private:
  Eigen::VectorXd derivative(const Eigen::VectorXd& s, double u) const;

  PkParameters pk_;
  OustaloupFilter filter_;
  double integrator_step_;
  PlantState state_;
};

/// A1, optionally with additive N(0, sigma^2) noise.
double sample_output(const TruthPlant& plant, double noise_sigma = 0.0,
                     std::mt19937_64* rng = nullptr);

}  // namespace fomc
