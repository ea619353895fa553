#include "fomc/qp.hpp"

#include "fomc/errors.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>

namespace fomc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_tolerance(double tol, double rhs) { return tol * std::max(1.0, std::abs(rhs)); }

// Orthonormal basis of span(rows) (columns of the result) via Householder QR.
// Returns the full d x d orthogonal factor; the first `rank` columns span the
// rows, the rest is the null space.
Eigen::MatrixXd full_q(const Eigen::MatrixXd& rows) {
  const auto d = rows.cols();
  if (rows.rows() == 0) return Eigen::MatrixXd::Identity(d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd gather_rows(const QuadraticProgram& qp, const std::vector<int>& active) {
  const int e = qp.num_equalities();
  Eigen::MatrixXd a(e + static_cast<int>(active.size()), qp.dim());
  if (e > 0) a.topRows(e) = qp.Aeq;
  for (std::size_t i = 0; i < active.size(); ++i) a.row(e + i) = qp.G.row(active[i]);
  return a;
}

// True when `row` adds a new direction to span(current rows).
bool increases_rank(const Eigen::MatrixXd& current, const Eigen::VectorXd& row) {
  const double norm = row.norm();
  if (norm == 0.0) return false;
  if (current.rows() == 0) return true;
  if (current.rows() >= current.cols()) return false;
  const Eigen::MatrixXd q = full_q(current);
  const auto r = current.rows();
  const Eigen::VectorXd proj = q.rightCols(q.cols() - r).transpose() * row;
  return proj.norm() > 1e-9 * norm;
}

}  // namespace

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kUnbounded: return "unbounded";
    case QpStatus::kMaxIterations: return "maxIterations";
  }
  return "unknown";
}

void QuadraticProgram::validate() const {
  const auto d = f.size();
  if (H.rows() != d || H.cols() != d) throw InvalidArgument("qp: H must be d x d");
  if (G.cols() != d && G.size() != 0) throw InvalidArgument("qp: G must have d columns");
  if (G.rows() != g.size()) throw InvalidArgument("qp: G and g disagree");
  if (Aeq.cols() != d && Aeq.size() != 0) throw InvalidArgument("qp: Aeq must have d columns");
  if (Aeq.rows() != beq.size()) throw InvalidArgument("qp: Aeq and beq disagree");
  const double scale = std::max(1.0, H.size() ? H.cwiseAbs().maxCoeff() : 0.0);
  if (H.size() && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("qp: H must be symmetric");
  }
  if (!H.allFinite() || !f.allFinite() || !G.allFinite() || !g.allFinite() ||
      !Aeq.allFinite() || !beq.allFinite()) {
    throw InvalidArgument("qp: non-finite problem data");
  }
}

double kkt_residual(const QuadraticProgram& qp, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu) {
  Eigen::VectorXd stat = qp.H * z + qp.f;
  if (qp.num_inequalities() > 0) stat += qp.G.transpose() * lambda;
  if (qp.num_equalities() > 0) stat += qp.Aeq.transpose() * mu;
  double r = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  for (int i = 0; i < qp.num_inequalities(); ++i) {
    const double slack = qp.g(i) - qp.G.row(i).dot(z);
    r = std::max(r, -slack);
    r = std::max(r, -lambda(i));
    r = std::max(r, std::abs(lambda(i) * slack));
  }
  for (int i = 0; i < qp.num_equalities(); ++i) {
    r = std::max(r, std::abs(qp.Aeq.row(i).dot(z) - qp.beq(i)));
  }
  return r;
}

QpStatus ActiveSetSolver::minimize_from_feasible(const QuadraticProgram& qp,
                                                 Eigen::VectorXd& z,
                                                 std::vector<int>& active,
                                                 int& iterations,
                                                 Eigen::VectorXd& lambda,
                                                 Eigen::VectorXd& mu,
                                                 bool stop_at_zero_last) {
  const int d = qp.dim();
  const int q = qp.num_inequalities();
  const int e = qp.num_equalities();
  const double hscale = std::max(1.0, qp.H.size() ? qp.H.cwiseAbs().maxCoeff() : 0.0);
  const double curvature_tol = 1e-11 * hscale * std::max(1, d);
  std::vector<char> in_set(q, 0);
  for (int i : active) in_set[i] = 1;
#ifndef NDEBUG
  double last_objective = qp.objective(z);
#endif

  while (iterations < options_.max_iterations) {
    ++iterations;
    if (stop_at_zero_last && z(d - 1) <= options_.feasibility_tolerance) {
      return QpStatus::kOptimal;
    }
    const Eigen::MatrixXd rows = gather_rows(qp, active);
    const int r = static_cast<int>(rows.rows());
    basis_ = full_q(rows);
    const Eigen::VectorXd grad = qp.H * z + qp.f;

    Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
    bool ray = false;
    if (r < d) {
      const auto zmat = basis_.rightCols(d - r);
      const Eigen::VectorXd gr = zmat.transpose() * grad;
      const Eigen::MatrixXd hr = zmat.transpose() * qp.H * zmat;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hr + hr.transpose()));
      const Eigen::VectorXd c = es.eigenvectors().transpose() * gr;
      const double gtol = 1e-12 * std::max(1.0, grad.cwiseAbs().maxCoeff());
      Eigen::VectorXd pr_newton = Eigen::VectorXd::Zero(d - r);
      Eigen::VectorXd pr_ray = Eigen::VectorXd::Zero(d - r);
      for (int i = 0; i < d - r; ++i) {
        const double lam = es.eigenvalues()(i);
        if (lam > curvature_tol) {
          pr_newton -= (c(i) / lam) * es.eigenvectors().col(i);
        } else if (std::abs(c(i)) > gtol) {
          pr_ray -= c(i) * es.eigenvectors().col(i);
          ray = true;
        }
      }
      p = zmat * (ray ? pr_ray : pr_newton);
    }

    const double step_tol = 1e-13 * std::max(1.0, z.cwiseAbs().maxCoeff());
    if (!ray && p.cwiseAbs().maxCoeff() <= step_tol) {
      // Stationary on the working set: check multipliers.
      Eigen::VectorXd mult = Eigen::VectorXd::Zero(r);
      if (r > 0) {
        mult = rows.transpose().colPivHouseholderQr().solve(-grad);
      }
      int drop = -1;
      double most_negative = 0.0;
      const double mtol = 1e-10 * std::max(1.0, grad.cwiseAbs().maxCoeff());
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double lk = mult(e + static_cast<int>(k));
        if (lk < -mtol && (drop < 0 || lk < most_negative ||
                           (lk == most_negative && active[k] < active[drop]))) {
          drop = static_cast<int>(k);
          most_negative = lk;
        }
      }
      if (drop < 0) {
        lambda = Eigen::VectorXd::Zero(q);
        for (std::size_t k = 0; k < active.size(); ++k) {
          lambda(active[k]) = std::max(0.0, mult(e + static_cast<int>(k)));
        }
        mu = mult.head(e);
        return QpStatus::kOptimal;
      }
      in_set[active[drop]] = 0;
      active.erase(active.begin() + drop);
      continue;
    }

    // Ratio test; lowest index wins ties.
    double alpha = ray ? kInf : 1.0;
    int blocking = -1;
    const double pnorm = p.norm();
    for (int i = 0; i < q; ++i) {
      if (in_set[i]) continue;
      const double ap = qp.G.row(i).dot(p);
      if (ap <= 1e-12 * qp.G.row(i).norm() * pnorm) continue;
      const double ratio = std::max(0.0, (qp.g(i) - qp.G.row(i).dot(z)) / ap);
      if (ratio < alpha) {
        alpha = ratio;
        blocking = i;
      }
    }
    if (!std::isfinite(alpha)) return QpStatus::kUnbounded;
    z += alpha * p;
#ifndef NDEBUG
    const double objective = qp.objective(z);
    assert(objective <= last_objective + 1e-9 * (1.0 + std::abs(last_objective)));
    last_objective = objective;
#endif
    if (blocking >= 0) {
      active.push_back(blocking);
      in_set[blocking] = 1;
    }
  }
  return QpStatus::kMaxIterations;
}

QpSolution ActiveSetSolver::solve(const QuadraticProgram& qp_in,
                                  const std::optional<Eigen::VectorXd>& warm_start) {
  qp_in.validate();
  QuadraticProgram qp = qp_in;
  const int d = qp.dim();
  const int q = qp.num_inequalities();
  if (qp.G.size() == 0) qp.G = Eigen::MatrixXd::Zero(0, d);
  if (qp.Aeq.size() == 0) qp.Aeq = Eigen::MatrixXd::Zero(0, d);
  const double tol = options_.feasibility_tolerance;

  QpSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(q);
  sol.mu = Eigen::VectorXd::Zero(qp.num_equalities());

  // Drop linearly dependent equality rows (after checking consistency below).
  std::vector<int> eq_keep;
  {
    Eigen::MatrixXd kept(0, d);
    for (int i = 0; i < qp.num_equalities(); ++i) {
      if (increases_rank(kept, qp.Aeq.row(i).transpose())) {
        kept.conservativeResize(kept.rows() + 1, Eigen::NoChange);
        kept.row(kept.rows() - 1) = qp.Aeq.row(i);
        eq_keep.push_back(i);
      }
    }
  }
  const QuadraticProgram full = qp;
  if (static_cast<int>(eq_keep.size()) != qp.num_equalities()) {
    Eigen::MatrixXd a(eq_keep.size(), d);
    Eigen::VectorXd b(eq_keep.size());
    for (std::size_t k = 0; k < eq_keep.size(); ++k) {
      a.row(k) = full.Aeq.row(eq_keep[k]);
      b(k) = full.beq(eq_keep[k]);
    }
    qp.Aeq = a;
    qp.beq = b;
  }

  Eigen::VectorXd z = warm_start.value_or(Eigen::VectorXd::Zero(d));
  if (z.size() != d || !z.allFinite()) {
    throw InvalidArgument("qp: warm start has wrong dimension or is non-finite");
  }
  if (qp.num_equalities() > 0) {
    const Eigen::VectorXd res = qp.Aeq * z - qp.beq;
    z -= qp.Aeq.completeOrthogonalDecomposition().solve(res);
    for (int i = 0; i < full.num_equalities(); ++i) {
      if (std::abs(full.Aeq.row(i).dot(z) - full.beq(i)) > row_tolerance(1e-8, full.beq(i))) {
        sol.status = QpStatus::kInfeasible;
        sol.z = z;
        return sol;
      }
    }
  }

  // Largest violation beyond the per-row tolerance (0 when feasible).
  auto max_violation = [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (int i = 0; i < q; ++i) {
      v = std::max(v, qp.G.row(i).dot(x) - qp.g(i) - row_tolerance(tol, qp.g(i)));
    }
    return v;
  };

  int iterations = 0;
  if (max_violation(z) > 0.0) {
    // Phase I: minimize t subject to G z - t <= g, -t <= 0, Aeq z = beq.
    QuadraticProgram ph;
    ph.H = Eigen::MatrixXd::Zero(d + 1, d + 1);
    ph.f = Eigen::VectorXd::Zero(d + 1);
    ph.f(d) = 1.0;
    ph.G = Eigen::MatrixXd::Zero(q + 1, d + 1);
    ph.G.topLeftCorner(q, d) = qp.G;
    ph.G.block(0, d, q, 1).setConstant(-1.0);
    ph.G(q, d) = -1.0;
    ph.g = Eigen::VectorXd::Zero(q + 1);
    ph.g.head(q) = qp.g;
    ph.Aeq = Eigen::MatrixXd::Zero(qp.num_equalities(), d + 1);
    ph.Aeq.leftCols(d) = qp.Aeq;
    ph.beq = qp.beq;
    Eigen::VectorXd zt(d + 1);
    zt.head(d) = z;
    zt(d) = std::max(0.0, (qp.G * z - qp.g).maxCoeff());
    std::vector<int> active;
    for (int i = 0; i < q; ++i) {
      if (qp.G.row(i).dot(z) - zt(d) >= qp.g(i) - row_tolerance(tol, qp.g(i)) &&
          increases_rank(gather_rows(ph, active), ph.G.row(i).transpose())) {
        active.push_back(i);
        break;  // one most-violated row; Phase I adds the rest as needed
      }
    }
    Eigen::VectorXd l1, m1;
    const QpStatus st = minimize_from_feasible(ph, zt, active, iterations, l1, m1, true);
    z = zt.head(d);
    if (st == QpStatus::kMaxIterations) {
      sol.status = st;
      sol.z = z;
      sol.iterations = iterations;
      return sol;
    }
    if (max_violation(z) > 0.0) {
      sol.status = QpStatus::kInfeasible;
      sol.z = z;
      sol.iterations = iterations;
      return sol;
    }
  }

  // Initial working set: active rows at z, independent, lowest index first.
  std::vector<int> active;
  {
    Eigen::MatrixXd rows = qp.Aeq;
    for (int i = 0; i < q; ++i) {
      const double slack = qp.g(i) - qp.G.row(i).dot(z);
      if (slack <= row_tolerance(tol, qp.g(i)) &&
          increases_rank(rows, qp.G.row(i).transpose())) {
        active.push_back(i);
        rows.conservativeResize(rows.rows() + 1, Eigen::NoChange);
        rows.row(rows.rows() - 1) = qp.G.row(i);
      }
    }
  }

  Eigen::VectorXd mu_kept;
  sol.status = minimize_from_feasible(qp, z, active, iterations, sol.lambda, mu_kept, false);
  sol.z = z;
  sol.iterations = iterations;
  sol.objective = full.objective(z);
  std::sort(active.begin(), active.end());
  sol.active_set = active;
  if (sol.status == QpStatus::kOptimal) {
    for (std::size_t k = 0; k < eq_keep.size(); ++k) sol.mu(eq_keep[k]) = mu_kept(k);
  } else {
    sol.lambda = Eigen::VectorXd::Zero(q);
  }
  sol.kkt_residual = kkt_residual(full, z, sol.lambda, sol.mu);
  return sol;
}

void dump_qp(const QuadraticProgram& qp, std::ostream& os) {
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = data;
    return j;
  };
  nlohmann::json j;
  j["H"] = mat(qp.H);
  j["f"] = mat(qp.f);
  j["G"] = mat(qp.G);
  j["g"] = mat(qp.g);
  j["Aeq"] = mat(qp.Aeq);
  j["beq"] = mat(qp.beq);
  os << j.dump(2) << '\n';
}

}  // namespace fomc
