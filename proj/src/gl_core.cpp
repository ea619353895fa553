#include "fomc/gl_core.hpp"

#include "fomc/errors.hpp"
#include "fomc/model_builder.hpp"

#include <cmath>
#include <string>

namespace fomc {

void IntervalBox::validate() const {
  for (Eigen::Index i = 0; i < radii.size(); ++i) {
    if (!std::isfinite(radii(i)) || radii(i) < 0.0) {
      throw InvalidArgument("interval box radius " + std::to_string(i) +
                            " must be finite and nonnegative");
    }
  }
}

GlCoefficients gl_coefficients(double order, int memory) {
  if (!std::isfinite(order) || order < 0.0) {
    throw InvalidArgument("GL order must be finite and nonnegative");
  }
  if (memory < 0) throw InvalidArgument("GL memory must be nonnegative");
  GlCoefficients c;
  c.order = order;
  c.memory = memory;
  c.values.resize(static_cast<std::size_t>(memory) + 1);
  c.values[0] = 1.0;
  for (int j = 1; j <= memory; ++j) {
    c.values[j] = c.values[j - 1] * (j - 1 - order) / j;
  }
  return c;
}

Eigen::VectorXd truncated_difference(const GlCoefficients& coeffs,
                                     std::span<const Eigen::VectorXd> history,
                                     double step) {
  if (history.size() != coeffs.values.size()) {
    throw InvalidArgument("history length " + std::to_string(history.size()) +
                          " does not match memory + 1 = " +
                          std::to_string(coeffs.values.size()));
  }
  if (!(step > 0.0)) throw InvalidArgument("step must be positive");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(history.front().size());
  for (std::size_t j = 0; j < history.size(); ++j) {
    if (history[j].size() != acc.size()) {
      throw InvalidArgument("history entries differ in dimension");
    }
    acc += coeffs.values[j] * history[j];
  }
  return std::pow(step, -coeffs.order) * acc;
}

TailSum tail_sum(double order, int memory) {
  if (!std::isfinite(order) || order < 0.0) {
    throw InvalidArgument("tail_sum order must be finite and nonnegative");
  }
  if (memory < 0) throw InvalidArgument("tail_sum memory must be nonnegative");
  TailSum out;
  if (order > 0.0 && order <= 1.0) {
    const GlCoefficients c = gl_coefficients(order, memory);
    double s = 0.0;
    for (double v : c.values) s += v;
    out.value = s;
    return out;
  }
  // Direct summation of |c_j|, j > memory.
  constexpr long kMaxTerms = 2'000'000;
  constexpr double kTermFloor = 1e-16;
  out.closed_form = false;
  double cj = 1.0;
  for (int j = 1; j <= memory; ++j) cj *= (j - 1 - order) / j;
  double s = 0.0;
  for (long j = memory + 1; out.terms < kMaxTerms; ++j) {
    cj *= (static_cast<double>(j) - 1.0 - order) / static_cast<double>(j);
    s += std::abs(cj);
    ++out.terms;
    if (std::abs(cj) < kTermFloor) break;
  }
  out.value = s;
  return out;
}

IntervalBox disturbance_box(const FractionalModel& model,
                            const IntervalBox& state_box,
                            const IntervalBox& input_box, double step,
                            int memory) {
  model.validate();
  state_box.validate();
  input_box.validate();
  const int n = model.state_dim();
  const int m = model.input_dim();
  if (state_box.radii.size() != n || input_box.radii.size() != m) {
    throw InvalidArgument("disturbance_box: box dimensions do not match model");
  }
  const Eigen::MatrixXd a0 = leading_matrix(model, step);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a0);
  if (!lu.isInvertible()) {
    throw SingularMatrix("A0", 1.0 / lu.rcond());
  }
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(n);
  for (const auto& term : model.state_terms) {
    const double tail = tail_sum(term.order, memory).value;
    const Eigen::MatrixXd scaled =
        lu.solve(std::pow(step, -term.order) * term.matrix).cwiseAbs();
    radius += tail * (scaled * state_box.radii);
  }
  for (const auto& term : model.input_terms) {
    const double tail = tail_sum(term.order, memory).value;
    const Eigen::MatrixXd scaled =
        lu.solve(std::pow(step, -term.order) * term.matrix).cwiseAbs();
    radius += tail * (scaled * input_box.radii);
  }
  return IntervalBox{radius};
}

}  // namespace fomc
