#include "fomc/estimator.hpp"

#include "fomc/dare.hpp"
#include "fomc/errors.hpp"

namespace fomc {

AugmentedModel augment(const DiscreteLtiModel& model) {
  const int n = model.augmented_dim();
  const int p = model.output_dim();
  const int nd = model.disturbance_dim();
  if (nd != p) {
    throw InvalidArgument("augment: disturbance dimension " + std::to_string(nd) +
                          " must equal output dimension " + std::to_string(p));
  }
  if (model.G.rows() != n || model.C.cols() != n || model.B.rows() != n) {
    throw InvalidArgument("augment: inconsistent model dimensions");
  }
  AugmentedModel aug;
  aug.state_dim = n;
  aug.disturbance_dim = nd;
  aug.A = Eigen::MatrixXd::Zero(n + nd, n + nd);
  aug.A.topLeftCorner(n, n) = model.A;
  aug.A.topRightCorner(n, nd) = model.G;
  aug.A.bottomRightCorner(nd, nd).setIdentity();
  aug.B = Eigen::MatrixXd::Zero(n + nd, model.input_dim());
  aug.B.topRows(n) = model.B;
  aug.C = Eigen::MatrixXd::Zero(p, n + nd);
  aug.C.leftCols(n) = model.C;
  if (model.Cd.size() != 0) aug.C.rightCols(nd) = model.Cd;
  return aug;
}

ObserverState design_observer(const AugmentedModel& model, const ObserverWeights& weights) {
  const int n = model.state_dim;
  const int nd = model.disturbance_dim;
  Eigen::VectorXd w(n + nd);
  w.head(n).setConstant(weights.state);
  w.tail(nd).setConstant(weights.disturbance);
  const Eigen::MatrixXd v =
      weights.measurement * Eigen::MatrixXd::Identity(model.C.rows(), model.C.rows());
  const ObserverGain gain = observer_gain(model.A, model.C, w.asDiagonal().toDenseMatrix(), v);
  if (!(gain.spectral_radius < 1.0)) {
    throw Error("design_observer: gain does not stabilize the error dynamics");
  }
  ObserverState s;
  s.xi_hat = Eigen::VectorXd::Zero(n + nd);
  s.L = gain.L;
  s.last_error = Eigen::VectorXd::Zero(model.C.rows());
  s.spectral_radius = gain.spectral_radius;
  return s;
}

ObserverState observer_step(const ObserverState& state, const AugmentedModel& model,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
  if (!y.allFinite()) throw InvalidArgument("observer_step: non-finite measurement");
  if (!u.allFinite()) throw InvalidArgument("observer_step: non-finite input");
  if (y.size() != model.C.rows() || u.size() != model.B.cols()) {
    throw InvalidArgument("observer_step: dimension mismatch");
  }
  ObserverState next = state;
  next.last_error = model.C * state.xi_hat - y;
  next.xi_hat = model.A * state.xi_hat + model.B * u + state.L * next.last_error;
  return next;
}

}  // namespace fomc
