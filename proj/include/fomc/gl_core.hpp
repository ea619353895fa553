#pragma once

// Grünwald-Letnikov coefficients, truncated differences, and bounds on the
// truncation residual.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fomc {

struct FractionalModel;

/// Coefficients c_j = (-1)^j binom(order, j) for j = 0..memory.
struct GlCoefficients {
  double order = 0.0;
  int memory = 0;
  std::vector<double> values;

  double operator[](std::size_t j) const { return values[j]; }
};

/// Balanced box {z : |z_i| <= radii_i}.
struct IntervalBox {
  Eigen::VectorXd radii;

  /// Throws InvalidArgument if any radius is negative or non-finite.
  void validate() const;
};

struct TailSum {
  double value = 0.0;
  /// True when the closed form sum_{j<=nu} c_j was used (0 < order <= 1).
  bool closed_form = true;
  /// Number of terms summed by the numerical fallback (0 for closed form).
  long terms = 0;
};

/// Computes c_0..c_memory by the recurrence c_j = c_{j-1} (j - 1 - order) / j.
/// Throws InvalidArgument for negative or non-finite order, or memory < 0.
GlCoefficients gl_coefficients(double order, int memory);

/// h^{-order} * sum_j c_j x_{k-j}. history[0] is the newest sample x_k.
Eigen::VectorXd truncated_difference(const GlCoefficients& coeffs,
                                     std::span<const Eigen::VectorXd> history,
                                     double step);

/// sum_{j > memory} |c_j^order|.
///
/// For 0 < order <= 1 every tail coefficient is negative and the full series
/// sums to (1 - 1)^order = 0, so the tail equals sum_{j=0}^{memory} c_j. Other
/// orders are summed term by term until |c_j| < 1e-16 (or a 2e6-term cap).
TailSum tail_sum(double order, int memory);

/// Outer box of the residual disturbance set for a model whose states and
/// inputs stay in the given balanced boxes.
///
/// radius = sum_i |A0^{-1} Abar_i| tail(alpha_i) x + sum_i |A0^{-1} Bbar_i|
/// tail(beta_i) u, with Abar_i = h^{-alpha_i} A_i and Bbar_i = h^{-beta_i} B_i.
IntervalBox disturbance_box(const FractionalModel& model,
                            const IntervalBox& state_box,
                            const IntervalBox& input_box, double step,
                            int memory);

}  // namespace fomc
