#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fomc {

/// Where a state term's difference operator is anchored.
enum class Evaluation {
  /// Delta^alpha x_{k+1}: the forward (implicit) operator.
  kForward,
  /// Delta^alpha x_k: evaluated at the current sample (explicit Euler style).
  kCurrent,
};

struct StateTerm {
  Eigen::MatrixXd matrix;
  double order = 0.0;
  Evaluation evaluation = Evaluation::kForward;
};

struct InputTerm {
  Eigen::MatrixXd matrix;
  double order = 0.0;
};

/// sum_i A_i D^{alpha_i} x = sum_i B_i D^{beta_i} u + B_d d,  y = C x + C_d d.
struct FractionalModel {
  std::vector<StateTerm> state_terms;
  std::vector<InputTerm> input_terms;
  Eigen::MatrixXd output;              // C, p x n
  Eigen::MatrixXd output_disturbance;  // C_d, p x p
  Eigen::MatrixXd disturbance;         // B_d, n x p (pre-division form)

  int state_dim() const;
  int input_dim() const;
  int output_dim() const { return static_cast<int>(output.rows()); }

  /// Throws InvalidArgument on inconsistent shapes or negative orders.
  void validate() const;
};

/// x~_{k+1} = A x~_k + B u_k + G d_k,  y_k = C x~_k + C_d d_k.
struct DiscreteLtiModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd G;
  Eigen::MatrixXd C;
  Eigen::MatrixXd Cd;
  double step = 0.0;
  int memory = 0;
  /// Dimension n of one state block.
  int block_dim = 0;
  /// Number of state blocks (x_k, x_{k-1}, ...) at the front of x~.
  int state_blocks = 0;

  int augmented_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
  int disturbance_dim() const { return static_cast<int>(G.cols()); }
};

/// Two-compartment fractional pharmacokinetic parameters.
struct PkParameters {
  double k10 = 1.4913;  // day^-1
  double k12 = 2.9522;  // day^-1
  double k21 = 0.4854;  // day^-alpha
  double alpha = 0.587;

  double k0() const { return k12 + k10; }
  double beta() const { return 1.0 - alpha; }
  void validate() const;
};

/// hat{A}_0 = sum over forward terms of h^{-alpha_i} A_i.
Eigen::MatrixXd leading_matrix(const FractionalModel& model, double step);

/// Euler-type discretization of a fractional model with memory nu.
///
/// Input terms use the backward operator Delta_{h,nu}^{beta} u_k, so x~
/// carries u_{k-1}..u_{k-nu}. Forward state terms span x_{k+1}..x_{k+1-nu};
/// current-sample terms span x_k..x_{k-nu} and add one extra state block.
/// G is A0^{-1} B_d on the newest block. Throws SingularMatrix if A0 is
/// singular, and InvalidArgument if the result is not stabilizable and
/// detectable.
DiscreteLtiModel discretize_general(const FractionalModel& model, double step,
                                    int memory);

/// The PK model with the first block row
/// [Lambda, Theta h^alpha c_1^beta, ..., Theta h^alpha c_nu^beta], where
/// Lambda = I + hM + h^alpha Theta. G = [B_d' 0 ... 0]', C = [1 0 ... 0].
DiscreteLtiModel build_pk_model(const PkParameters& params, double step,
                                int memory);

/// The PK dynamics D x = M x + Theta D^beta x + B u written as a
/// FractionalModel (explicit Euler anchoring), for discretize_general.
FractionalModel pk_fractional_model(const PkParameters& params);

struct RankReport {
  bool observable = false;
  int observability_rank = 0;
  /// Every mode with |lambda| >= 1 is observable (PBH).
  bool detectable = false;
  int state_dim = 0;
  bool disturbance_rank_ok = false;
  int disturbance_matrix_rank = 0;
  int disturbance_matrix_cols = 0;
  bool dimension_ok = false;

  /// Conditions needed to build a converging augmented observer. Strict
  /// observability is reported but not required: unobservable history
  /// blocks at eigenvalue 0 are harmless.
  bool passed() const {
    return detectable && disturbance_rank_ok && dimension_ok;
  }
};

/// Observability (and detectability) of (C, A), full column rank of
/// [[A - I, G], [C, C_d]] and dim(d) <= dim(y). Ranks use a relative
/// tolerance of 1e-8.
RankReport check_augmented_observability(const DiscreteLtiModel& model);

}  // namespace fomc
