#pragma once

#include <Eigen/Dense>

#include "fomc/model_builder.hpp"

namespace fomc {

/// xi = (x~, d) with xi+ = Abar xi + Bbar u, y = Cbar xi.
struct AugmentedModel {
  Eigen::MatrixXd A;  // [[A, G], [0, I]]
  Eigen::MatrixXd B;  // [B; 0]
  Eigen::MatrixXd C;  // [C, C_d]
  int state_dim = 0;
  int disturbance_dim = 0;
};

/// Requires dim(d) == dim(y); throws InvalidArgument otherwise.
AugmentedModel augment(const DiscreteLtiModel& model);

struct ObserverWeights {
  double state = 1e-2;        // process noise on the x~ blocks
  double disturbance = 1e-1;  // process noise on d
  double measurement = 1e-2;  // V
};

struct ObserverState {
  Eigen::VectorXd xi_hat;
  Eigen::MatrixXd L;
  /// e_k = Cbar xi_hat_k - y_k from the last step.
  Eigen::VectorXd last_error;
  /// Spectral radius of Abar + L Cbar, filled in by design_observer.
  double spectral_radius = 0.0;

  Eigen::VectorXd state_estimate(const AugmentedModel& m) const {
    return xi_hat.head(m.state_dim);
  }
  Eigen::VectorXd disturbance_estimate(const AugmentedModel& m) const {
    return xi_hat.tail(m.disturbance_dim);
  }
};

/// LQG gain from the dual Riccati equation with diagonal weights; the
/// estimate starts at zero. Throws if the gain does not stabilize Abar + L Cbar.
ObserverState design_observer(const AugmentedModel& model,
                              const ObserverWeights& weights = {});

/// e = Cbar xi - y;  xi+ = Abar xi + Bbar u + L e.
ObserverState observer_step(const ObserverState& state, const AugmentedModel& model,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& y);

}  // namespace fomc
