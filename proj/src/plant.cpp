#include "fomc/plant.hpp"

#include <cmath>

#include "fomc/errors.hpp"

namespace fomc {

namespace {

// Monic polynomial coefficients of prod (s + r_k), highest power first.
Eigen::VectorXd expand(const Eigen::VectorXd& roots) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(roots.size() + 1);
  c(0) = 1.0;
  for (Eigen::Index k = 0; k < roots.size(); ++k) {
    for (Eigen::Index i = k + 1; i >= 1; --i) c(i) += roots(k) * c(i - 1);
  }
  return c;
}

}  // namespace

std::complex<double> OustaloupFilter::response(double w) const {
  const std::complex<double> s(0.0, w);
  std::complex<double> h = gain;
  for (int k = 0; k < stages; ++k) h *= (s + zeros(k)) / (s + poles(k));
  return h;
}

std::complex<double> OustaloupFilter::state_space_response(double w) const {
  const int n = stages;
  const Eigen::MatrixXcd m =
      std::complex<double>(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
  const Eigen::VectorXcd x = m.partialPivLu().solve(B.cast<std::complex<double>>());
  return (C.cast<std::complex<double>>() * x)(0) + D;
}

OustaloupFilter build_oustaloup(double order, double w_low, double w_high, int stages) {
  if (!(order > 0.0 && order < 1.0)) throw InvalidArgument("oustaloup: order must be in (0, 1)");
  if (!(w_low > 0.0 && w_low < w_high && std::isfinite(w_high))) {
    throw InvalidArgument("oustaloup: need 0 < w_low < w_high");
  }
  if (stages < 1) throw InvalidArgument("oustaloup: need at least one stage");
  OustaloupFilter f;
  f.order = order;
  f.w_low = w_low;
  f.w_high = w_high;
  f.stages = stages;
  f.zeros.resize(stages);
  f.poles.resize(stages);
  const double ratio = w_high / w_low;
  for (int k = 1; k <= stages; ++k) {
    f.zeros(k - 1) = w_low * std::pow(ratio, (2.0 * k - 1.0 - order) / (2.0 * stages));
    f.poles(k - 1) = w_low * std::pow(ratio, (2.0 * k - 1.0 + order) / (2.0 * stages));
  }
  f.gain = std::pow(w_high, order);

  // H = D + (num - D den) / den with den monic of degree N_f.
  const Eigen::VectorXd num = f.gain * expand(f.zeros);
  const Eigen::VectorXd den = expand(f.poles);
  f.D = num(0);
  f.A = Eigen::MatrixXd::Zero(stages, stages);
  f.A.topRightCorner(stages - 1, stages - 1).setIdentity();
  f.B = Eigen::VectorXd::Zero(stages);
  f.B(stages - 1) = 1.0;
  f.C.resize(stages);
  for (int i = 0; i < stages; ++i) {
    // Row n-1 holds -a_n ... -a_1; state i multiplies s^i.
    f.A(stages - 1, i) = -den(stages - i);
    f.C(i) = num(stages - i) - f.D * den(stages - i);
  }
  return f;
}

TruthPlant::TruthPlant(PkParameters pk, OustaloupFilter filter, double integrator_step)
    : pk_(pk), filter_(std::move(filter)), integrator_step_(integrator_step) {
  pk_.validate();
  if (!(integrator_step_ > 0.0)) throw InvalidArgument("plant: integrator step must be positive");
  state_.z = Eigen::VectorXd::Zero(filter_.stages);
}

// Layout: (A1, A2, eliminated, administered, z).
Eigen::VectorXd TruthPlant::derivative(const Eigen::VectorXd& s, double u) const {
  const int nf = filter_.stages;
  const double a1 = s(0), a2 = s(1);
  const auto z = s.tail(nf);
  const double frac = filter_.C.dot(z) + filter_.D * a2;  // D^{1-alpha} A2
  Eigen::VectorXd ds(4 + nf);
  ds(0) = -(pk_.k12 + pk_.k10) * a1 + pk_.k21 * frac + u;
  ds(1) = pk_.k12 * a1 - pk_.k21 * frac;
  ds(2) = pk_.k10 * a1;
  ds(3) = u;
  ds.tail(nf) = filter_.A * z + filter_.B * a2;
  return ds;
}

void TruthPlant::step(double u, double duration) {
  if (!std::isfinite(u) || u < 0.0) throw InvalidArgument("plant_step: input must be finite and >= 0");
  if (!(duration > 0.0)) throw InvalidArgument("plant_step: duration must be positive");
  const int nf = filter_.stages;
  Eigen::VectorXd s(4 + nf);
  s << state_.a1, state_.a2, state_.eliminated, state_.administered, state_.z;
  const int substeps = std::max(1, static_cast<int>(std::ceil(duration / integrator_step_ - 1e-9)));
  const double dt = duration / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Eigen::VectorXd k1 = derivative(s, u);
    const Eigen::VectorXd k2 = derivative(s + 0.5 * dt * k1, u);
    const Eigen::VectorXd k3 = derivative(s + 0.5 * dt * k2, u);
    const Eigen::VectorXd k4 = derivative(s + dt * k3, u);
    const Eigen::VectorXd next = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      throw Error("plant_step: non-finite state at t = " + std::to_string(state_.time));
    }
    if (next(0) < -1e-9 || next(1) < -1e-9) {
      throw Error("plant_step: negative compartment amount at t = " +
                  std::to_string(state_.time + dt));
    }
    s = next;
    state_.a1 = s(0);
    state_.a2 = s(1);
    state_.eliminated = s(2);
    state_.administered = s(3);
    state_.z = s.tail(nf);
    state_.time += dt;
  }
}

double sample_output(const TruthPlant& plant, double noise_sigma, std::mt19937_64* rng) {
  const double a1 = plant.state().a1;
  if (noise_sigma <= 0.0) return a1;
  if (rng == nullptr) throw InvalidArgument("sample_output: noise requires a generator");
  std::normal_distribution<double> noise(0.0, noise_sigma);
  return a1 + noise(*rng);
}

}  // namespace fomc
