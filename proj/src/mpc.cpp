#include "fomc/mpc.hpp"

#include "fomc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fomc {

bool StageConstraints::any_soft() const {
  return std::any_of(soft.begin(), soft.end(), [](bool b) { return b; });
}

StageConstraints input_box_output_upper(const DiscreteLtiModel& model,
                                        const Eigen::VectorXd& u_min,
                                        const Eigen::VectorXd& u_max,
                                        std::optional<Eigen::VectorXd> y_max) {
  const int n = model.augmented_dim();
  const int m = model.input_dim();
  const int p = model.output_dim();
  if (u_min.size() != m || u_max.size() != m) {
    throw InvalidArgument("input bounds must have one entry per input");
  }
  const int rows = 2 * m + (y_max ? p : 0);
  StageConstraints c;
  c.Fx = Eigen::MatrixXd::Zero(rows, n);
  c.Fu = Eigen::MatrixXd::Zero(rows, m);
  c.f = Eigen::VectorXd::Zero(rows);
  c.soft.assign(rows, false);
  for (int i = 0; i < m; ++i) {
    c.Fu(2 * i, i) = 1.0;
    c.f(2 * i) = u_max(i);
    c.Fu(2 * i + 1, i) = -1.0;
    c.f(2 * i + 1) = -u_min(i);
  }
  if (y_max) {
    if (y_max->size() != p) throw InvalidArgument("output bound must have one entry per output");
    c.Fx.bottomRows(p) = model.C;
    c.f.tail(p) = *y_max;
    for (int i = 0; i < p; ++i) c.soft[2 * m + i] = true;
  }
  return c;
}

Eigen::VectorXd TargetMap::x_bar(const Eigen::VectorXd& d_hat, const Eigen::VectorXd& r) const {
  Eigen::VectorXd dr(d_hat.size() + r.size());
  dr << d_hat, r;
  return (W * dr).head(state_dim);
}

Eigen::VectorXd TargetMap::u_bar(const Eigen::VectorXd& d_hat, const Eigen::VectorXd& r) const {
  Eigen::VectorXd dr(d_hat.size() + r.size());
  dr << d_hat, r;
  return (W * dr).tail(W.rows() - state_dim);
}

TargetMap build_target_map(const DiscreteLtiModel& model) {
  const int n = model.augmented_dim();
  const int m = model.input_dim();
  const int p = model.output_dim();
  const int nd = model.disturbance_dim();
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n + p, n + m);
  lhs.topLeftCorner(n, n) = model.A - Eigen::MatrixXd::Identity(n, n);
  lhs.topRightCorner(n, m) = model.B;
  lhs.bottomLeftCorner(p, n) = model.C;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + p, nd + p);
  rhs.topLeftCorner(n, nd) = -model.G;
  if (model.Cd.size() != 0) rhs.bottomLeftCorner(p, nd) = -model.Cd;
  rhs.bottomRightCorner(p, p).setIdentity();

  TargetMap t;
  t.state_dim = n;
  t.condition_number = linalg::condition_number(lhs);
  if (lhs.rows() == lhs.cols()) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
      throw SingularMatrix("target system [[A-I, B], [C, 0]]", t.condition_number);
    }
    t.W = lu.solve(rhs);
  } else {
    t.W = lhs.completeOrthogonalDecomposition().solve(rhs);
  }
  t.residual = linalg::max_abs(lhs * t.W - rhs);
  if (lhs.rows() != lhs.cols() && t.residual > 1e-6) {
    throw Error("target map: least-squares residual " + std::to_string(t.residual) +
                " exceeds 1e-6");
  }
  return t;
}

namespace detail {

CondensedCache::CondensedCache(const DiscreteLtiModel& model, const MpcConfig& cfg) {
  const int n = model.augmented_dim();
  const int m = model.input_dim();
  const int nd = model.disturbance_dim();
  const int N = cfg.horizon;
  if (N < 1) throw InvalidArgument("mpc: horizon must be at least 1");
  if (cfg.Q.rows() != n || cfg.Q.cols() != n || cfg.P.rows() != n || cfg.P.cols() != n ||
      cfg.R.rows() != m || cfg.R.cols() != m) {
    throw InvalidArgument("mpc: weight matrices do not match the model");
  }
  const StageConstraints& sc = cfg.constraints;
  const int q = sc.rows();
  if (sc.Fx.rows() != q || sc.Fu.rows() != q || (q > 0 && (sc.Fx.cols() != n || sc.Fu.cols() != m)) ||
      static_cast<int>(sc.soft.size()) != q) {
    throw InvalidArgument("mpc: constraint matrices have inconsistent shapes");
  }
  if (!(cfg.soft_penalty > 0.0)) throw InvalidArgument("mpc: soft penalty must be positive");

  horizon = N;
  num_inputs = m;
  has_slack = sc.any_soft();
  num_vars = N * m + (has_slack ? 1 : 0);

  phi = Eigen::MatrixXd::Zero((N + 1) * n, n);
  gamma = Eigen::MatrixXd::Zero((N + 1) * n, N * m);
  psi = Eigen::MatrixXd::Zero((N + 1) * n, nd);
  phi.topRows(n).setIdentity();
  for (int j = 1; j <= N; ++j) {
    phi.middleRows(j * n, n) = model.A * phi.middleRows((j - 1) * n, n);
    gamma.block(j * n, 0, n, N * m) = model.A * gamma.block((j - 1) * n, 0, n, N * m);
    gamma.block(j * n, (j - 1) * m, n, m) = model.B;
    psi.middleRows(j * n, n) = model.A * psi.middleRows((j - 1) * n, n) + model.G;
  }

  // Gamma' Qbar with Qbar = blkdiag(Q, ..., Q, P).
  gamma_t_qbar = Eigen::MatrixXd::Zero(N * m, (N + 1) * n);
  for (int j = 0; j <= N; ++j) {
    const Eigen::MatrixXd& w = j < N ? cfg.Q : cfg.P;
    gamma_t_qbar.middleCols(j * n, n) = gamma.middleRows(j * n, n).transpose() * w;
  }
  hessian = Eigen::MatrixXd::Zero(num_vars, num_vars);
  Eigen::MatrixXd huu = gamma_t_qbar * gamma;
  for (int j = 0; j < N; ++j) huu.block(j * m, j * m, m, m) += cfg.R;
  hessian.topLeftCorner(N * m, N * m) = huu + huu.transpose();  // 2 * sym
  if (has_slack) hessian(N * m, N * m) = 2.0 * cfg.soft_penalty;

  const int rows = N * q + (has_slack ? 1 : 0);
  g_ineq = Eigen::MatrixXd::Zero(rows, num_vars);
  fx_phi = Eigen::MatrixXd::Zero(rows, n);
  fx_psi = Eigen::MatrixXd::Zero(rows, nd);
  f_stacked = Eigen::VectorXd::Zero(rows);
  for (int j = 0; j < N; ++j) {
    if (q == 0) break;
    g_ineq.block(j * q, 0, q, N * m) = sc.Fx * gamma.middleRows(j * n, n);
    g_ineq.block(j * q, j * m, q, m) += sc.Fu;
    fx_phi.middleRows(j * q, q) = sc.Fx * phi.middleRows(j * n, n);
    fx_psi.middleRows(j * q, q) = sc.Fx * psi.middleRows(j * n, n);
    f_stacked.segment(j * q, q) = sc.f;
    if (has_slack) {
      for (int i = 0; i < q; ++i) {
        if (sc.soft[i]) g_ineq(j * q + i, N * m) = -1.0;
      }
    }
  }
  if (has_slack) g_ineq(rows - 1, N * m) = -1.0;  // s >= 0
}

QuadraticProgram CondensedCache::assemble(const MpcConfig& cfg, const Eigen::VectorXd& x_hat,
                                          const Eigen::VectorXd& d_hat,
                                          const Eigen::VectorXd& x_bar,
                                          const Eigen::VectorXd& u_bar) const {
  const int n = static_cast<int>(phi.cols());
  const int N = horizon;
  const int m = num_inputs;
  if (x_hat.size() != n || x_bar.size() != n || u_bar.size() != m ||
      d_hat.size() != psi.cols()) {
    throw InvalidArgument("mpc: state, disturbance or target has the wrong size");
  }
  // Predicted free response minus the target, for j = 0..N.
  Eigen::VectorXd offset = phi * x_hat + psi * d_hat;
  for (int j = 0; j <= N; ++j) offset.segment(j * n, n) -= x_bar;

  QuadraticProgram qp;
  qp.H = hessian;
  qp.f = Eigen::VectorXd::Zero(num_vars);
  qp.f.head(N * m) = 2.0 * (gamma_t_qbar * offset);
  const Eigen::VectorXd r_ubar = cfg.R * u_bar;
  for (int j = 0; j < N; ++j) qp.f.segment(j * m, m) -= 2.0 * r_ubar;
  qp.G = g_ineq;
  qp.g = f_stacked - fx_phi * x_hat - fx_psi * d_hat;
  qp.Aeq = Eigen::MatrixXd::Zero(0, num_vars);
  qp.beq = Eigen::VectorXd::Zero(0);
  return qp;
}

}  // namespace detail

QuadraticProgram build_condensed_qp(const MpcConfig& cfg, const DiscreteLtiModel& model,
                                    const Eigen::VectorXd& x_hat, const Eigen::VectorXd& d_hat,
                                    const Eigen::VectorXd& x_bar, const Eigen::VectorXd& u_bar) {
  return detail::CondensedCache(model, cfg).assemble(cfg, x_hat, d_hat, x_bar, u_bar);
}

MpcController::MpcController(DiscreteLtiModel model, MpcConfig cfg)
    : model_(std::move(model)),
      cfg_(std::move(cfg)),
      target_(build_target_map(model_)),
      cache_(model_, cfg_) {
  const int m = model_.input_dim();
  const double inf = std::numeric_limits<double>::infinity();
  u_lower_ = Eigen::VectorXd::Constant(m, -inf);
  u_upper_ = Eigen::VectorXd::Constant(m, inf);
  // Pure input-bound rows (F_x = 0, a single nonzero in F_u) give the clamp.
  const StageConstraints& sc = cfg_.constraints;
  for (int i = 0; i < sc.rows(); ++i) {
    if (sc.soft[i] || !sc.Fx.row(i).isZero(0.0)) continue;
    int nz = -1, count = 0;
    for (int k = 0; k < m; ++k) {
      if (sc.Fu(i, k) != 0.0) {
        nz = k;
        ++count;
      }
    }
    if (count != 1) continue;
    const double bound = sc.f(i) / sc.Fu(i, nz);
    if (sc.Fu(i, nz) > 0.0) {
      u_upper_(nz) = std::min(u_upper_(nz), bound);
    } else {
      u_lower_(nz) = std::max(u_lower_(nz), bound);
    }
  }
}

QuadraticProgram MpcController::condensed_qp(const Eigen::VectorXd& x_hat,
                                             const Eigen::VectorXd& d_hat,
                                             const Eigen::VectorXd& x_bar,
                                             const Eigen::VectorXd& u_bar) const {
  return cache_.assemble(cfg_, x_hat, d_hat, x_bar, u_bar);
}

MpcStep MpcController::step(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& d_hat,
                            const Eigen::VectorXd& r) {
  if (!x_hat.allFinite() || !d_hat.allFinite() || !r.allFinite()) {
    throw InvalidArgument("mpc_step: non-finite input");
  }
  MpcStep out;
  out.x_bar = target_.x_bar(d_hat, r);
  out.u_bar = target_.u_bar(d_hat, r);
  const QuadraticProgram qp = cache_.assemble(cfg_, x_hat, d_hat, out.x_bar, out.u_bar);

  const int m = cache_.num_inputs;
  const int N = cache_.horizon;
  std::optional<Eigen::VectorXd> warm;
  if (warm_) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(cache_.num_vars);
    z.head((N - 1) * m) = warm_->segment(m, (N - 1) * m);
    z.segment((N - 1) * m, m) = warm_->segment((N - 1) * m, m);
    if (cache_.has_slack) {
      // Smallest slack that makes the shifted sequence feasible.
      const Eigen::VectorXd resid = qp.G * z - qp.g;
      double s = 0.0;
      for (Eigen::Index i = 0; i < resid.size(); ++i) {
        if (qp.G(i, N * m) < 0.0) s = std::max(s, resid(i));
      }
      z(N * m) = s;
    }
    warm = z;
  }
  const QpSolution sol = solver_.solve(qp, warm);
  if (sol.status != QpStatus::kOptimal) {
    warm_.reset();
    throw MpcInfeasible("mpc_step: QP " + to_string(sol.status), x_hat, d_hat, r);
  }
  warm_ = sol.z;
  out.u = sol.z.head(m).cwiseMax(u_lower_).cwiseMin(u_upper_);
  out.slack = cache_.has_slack ? sol.z(N * m) : 0.0;
  out.qp_iterations = sol.iterations;
  out.kkt_residual = sol.kkt_residual;
  // Constant part of V_N dropped by the condensed objective.
  Eigen::VectorXd offset = cache_.phi * x_hat + cache_.psi * d_hat;
  const int n = model_.augmented_dim();
  double constant = 0.0;
  for (int j = 0; j <= N; ++j) {
    const Eigen::VectorXd e = offset.segment(j * n, n) - out.x_bar;
    constant += e.dot((j < N ? cfg_.Q : cfg_.P) * e);
  }
  constant += N * out.u_bar.dot(cfg_.R * out.u_bar);
  out.cost = sol.objective + constant;
  return out;
}

}  // namespace fomc
