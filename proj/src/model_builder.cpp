#include "fomc/model_builder.hpp"

#include "fomc/errors.hpp"
#include "fomc/gl_core.hpp"
#include "fomc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fomc {

int FractionalModel::state_dim() const {
  return state_terms.empty() ? 0
                             : static_cast<int>(state_terms.front().matrix.rows());
}

int FractionalModel::input_dim() const {
  return input_terms.empty() ? 0
                             : static_cast<int>(input_terms.front().matrix.cols());
}

void FractionalModel::validate() const {
  if (state_terms.empty()) throw InvalidArgument("model has no state terms");
  const int n = state_dim();
  double max_order = 0.0;
  double max_state_order = 0.0;
  for (const auto& t : state_terms) {
    if (t.matrix.rows() != n || t.matrix.cols() != n) {
      throw InvalidArgument("state term matrices must all be n x n");
    }
    if (!std::isfinite(t.order) || t.order < 0.0) {
      throw InvalidArgument("state term orders must be nonnegative");
    }
    max_order = std::max(max_order, t.order);
    max_state_order = std::max(max_state_order, t.order);
  }
  const int m = input_dim();
  for (const auto& t : input_terms) {
    if (t.matrix.rows() != n || t.matrix.cols() != m) {
      throw InvalidArgument("input term matrices must all be n x m");
    }
    if (!std::isfinite(t.order) || t.order < 0.0) {
      throw InvalidArgument("input term orders must be nonnegative");
    }
    max_order = std::max(max_order, t.order);
  }
  if (max_state_order < max_order) {
    throw InvalidArgument("no state term carries the leading derivative order");
  }
  if (output.cols() != n) throw InvalidArgument("output matrix must be p x n");
  const auto p = output.rows();
  if (output_disturbance.size() != 0 &&
      (output_disturbance.rows() != p || output_disturbance.cols() != p)) {
    throw InvalidArgument("output disturbance matrix must be p x p");
  }
  if (disturbance.size() != 0 &&
      (disturbance.rows() != n || disturbance.cols() != p)) {
    throw InvalidArgument("disturbance matrix must be n x p");
  }
}

void PkParameters::validate() const {
  if (!(k10 > 0.0) || !(k12 > 0.0) || !(k21 > 0.0)) {
    throw InvalidArgument("PK rate constants must be strictly positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("PK order alpha must lie in (0, 1)");
  }
}

Eigen::MatrixXd leading_matrix(const FractionalModel& model, double step) {
  const int n = model.state_dim();
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : model.state_terms) {
    if (t.evaluation == Evaluation::kForward) {
      a0 += std::pow(step, -t.order) * t.matrix;
    }
  }
  return a0;
}

namespace {

void check_structure(const DiscreteLtiModel& m) {
  if (!linalg::is_stabilizable(m.A, m.B)) {
    throw InvalidArgument("discrete model: (A, B) is not stabilizable");
  }
  if (!linalg::is_detectable(m.A, m.C)) {
    throw InvalidArgument("discrete model: (C, A) is not detectable");
  }
}

}  // namespace

DiscreteLtiModel discretize_general(const FractionalModel& model, double step,
                                    int memory) {
  model.validate();
  if (!(step > 0.0)) throw InvalidArgument("step must be positive");
  if (memory < 1) throw InvalidArgument("memory must be at least 1");

  const int n = model.state_dim();
  const int m = model.input_dim();
  const int p = model.output_dim();
  const bool any_current =
      std::any_of(model.state_terms.begin(), model.state_terms.end(),
                  [](const StateTerm& t) { return t.evaluation == Evaluation::kCurrent; });
  const int lags = memory + (any_current ? 1 : 0);

  // hat{A}_l multiplies x_{k+1-l}.
  std::vector<Eigen::MatrixXd> a_hat(lags + 1, Eigen::MatrixXd::Zero(n, n));
  for (const auto& t : model.state_terms) {
    const GlCoefficients c = gl_coefficients(t.order, memory);
    const Eigen::MatrixXd scaled = std::pow(step, -t.order) * t.matrix;
    const int offset = t.evaluation == Evaluation::kCurrent ? 1 : 0;
    for (int j = 0; j <= memory; ++j) a_hat[j + offset] += c[j] * scaled;
  }
  // hat{B}_j multiplies u_{k-j}.
  std::vector<Eigen::MatrixXd> b_hat(memory + 1, Eigen::MatrixXd::Zero(n, m));
  for (const auto& t : model.input_terms) {
    const GlCoefficients c = gl_coefficients(t.order, memory);
    const Eigen::MatrixXd scaled = std::pow(step, -t.order) * t.matrix;
    for (int j = 0; j <= memory; ++j) b_hat[j] += c[j] * scaled;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a_hat[0]);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    throw SingularMatrix("A0", linalg::condition_number(a_hat[0]));
  }

  Eigen::MatrixXd bd = model.disturbance;
  if (bd.size() == 0) {
    if (p != n) {
      throw InvalidArgument("disturbance matrix required when outputs != states");
    }
    bd = Eigen::MatrixXd::Identity(n, n);
  }

  const int na = n * lags + m * memory;
  const int input_offset = n * lags;
  DiscreteLtiModel out;
  out.A = Eigen::MatrixXd::Zero(na, na);
  out.B = Eigen::MatrixXd::Zero(na, m);
  out.G = Eigen::MatrixXd::Zero(na, p);
  out.C = Eigen::MatrixXd::Zero(p, na);
  out.Cd = model.output_disturbance.size() == 0 ? Eigen::MatrixXd::Zero(p, p)
                                                : model.output_disturbance;
  out.step = step;
  out.memory = memory;
  out.block_dim = n;
  out.state_blocks = lags;

  for (int l = 1; l <= lags; ++l) {
    out.A.block(0, (l - 1) * n, n, n) = -lu.solve(a_hat[l]);
  }
  for (int j = 1; j <= memory; ++j) {
    out.A.block(0, input_offset + (j - 1) * m, n, m) = lu.solve(b_hat[j]);
  }
  for (int l = 1; l < lags; ++l) {
    out.A.block(l * n, (l - 1) * n, n, n).setIdentity();
  }
  for (int j = 1; j < memory; ++j) {
    out.A.block(input_offset + j * m, input_offset + (j - 1) * m, m, m).setIdentity();
  }
  out.B.topRows(n) = lu.solve(b_hat[0]);
  if (m > 0) out.B.block(input_offset, 0, m, m).setIdentity();
  out.G.topRows(n) = lu.solve(bd);
  out.C.leftCols(n) = model.output;

  check_structure(out);
  return out;
}

DiscreteLtiModel build_pk_model(const PkParameters& params, double step,
                                int memory) {
  params.validate();
  if (!(step > 0.0)) throw InvalidArgument("step must be positive");
  if (memory < 1) throw InvalidArgument("memory must be at least 1");

  Eigen::Matrix2d mm;
  mm << -params.k0(), 0.0, params.k12, 0.0;
  Eigen::Matrix2d theta;
  theta << 0.0, params.k21, 0.0, -params.k21;
  const double h_alpha = std::pow(step, params.alpha);
  const GlCoefficients c = gl_coefficients(params.beta(), memory);

  const int na = 2 * (memory + 1);
  DiscreteLtiModel out;
  out.A = Eigen::MatrixXd::Zero(na, na);
  out.A.block<2, 2>(0, 0) =
      Eigen::Matrix2d::Identity() + step * mm + h_alpha * theta;
  for (int j = 1; j <= memory; ++j) {
    out.A.block<2, 2>(0, 2 * j) = h_alpha * c[j] * theta;
  }
  for (int j = 1; j <= memory; ++j) {
    out.A.block<2, 2>(2 * j, 2 * (j - 1)).setIdentity();
  }
  out.B = Eigen::MatrixXd::Zero(na, 1);
  out.B(0, 0) = step;
  out.G = Eigen::MatrixXd::Zero(na, 1);
  out.G(0, 0) = 1.0;
  out.C = Eigen::MatrixXd::Zero(1, na);
  out.C(0, 0) = 1.0;
  out.Cd = Eigen::MatrixXd::Zero(1, 1);
  out.step = step;
  out.memory = memory;
  out.block_dim = 2;
  out.state_blocks = memory + 1;

  check_structure(out);
  return out;
}

FractionalModel pk_fractional_model(const PkParameters& params) {
  params.validate();
  Eigen::MatrixXd mm(2, 2);
  mm << -params.k0(), 0.0, params.k12, 0.0;
  Eigen::MatrixXd theta(2, 2);
  theta << 0.0, params.k21, 0.0, -params.k21;
  FractionalModel fm;
  fm.state_terms.push_back({Eigen::MatrixXd::Identity(2, 2), 1.0, Evaluation::kForward});
  fm.state_terms.push_back({-mm, 0.0, Evaluation::kCurrent});
  fm.state_terms.push_back({-theta, params.beta(), Evaluation::kCurrent});
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  fm.input_terms.push_back({b, 0.0});
  fm.output = Eigen::MatrixXd(1, 2);
  fm.output << 1.0, 0.0;
  fm.output_disturbance = Eigen::MatrixXd::Zero(1, 1);
  fm.disturbance = b;
  return fm;
}

RankReport check_augmented_observability(const DiscreteLtiModel& model) {
  RankReport r;
  const int na = model.augmented_dim();
  const int p = model.output_dim();
  const int nd = model.disturbance_dim();
  r.state_dim = na;
  r.observability_rank = linalg::observability_rank(model.A, model.C);
  r.observable = r.observability_rank == na;
  r.detectable = linalg::is_detectable(model.A, model.C);

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(na + p, na + nd);
  stacked.topLeftCorner(na, na) = model.A - Eigen::MatrixXd::Identity(na, na);
  stacked.topRightCorner(na, nd) = model.G;
  stacked.bottomLeftCorner(p, na) = model.C;
  if (model.Cd.size() != 0) stacked.bottomRightCorner(p, nd) = model.Cd;
  r.disturbance_matrix_cols = na + nd;
  r.disturbance_matrix_rank = linalg::numerical_rank(stacked);
  r.disturbance_rank_ok = r.disturbance_matrix_rank == na + nd;
  r.dimension_ok = nd <= p;
  return r;
}

}  // namespace fomc
