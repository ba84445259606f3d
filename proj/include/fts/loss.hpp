#ifndef FTS_LOSS_HPP
#define FTS_LOSS_HPP

#include "fts/network.hpp"

namespace fts {

struct LossConfig {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double delta1 = 1.0;
  double delta2 = 0.1;

  void validate() const;
};

/// Collocation points. interior and boundary hold [t; x] columns, initial
/// holds bare states (all evaluated at t0).
struct CollocationSet {
  Mat interior;
  Mat boundary;
  Mat initial;
};

/// mean_i (max{vdot_i + delta1, 0})^2, divided by the number of points given.
double l1_hat(const LyapunovNet& net, const VectorField& sys, const Mat& points,
              double delta1);
double l1_hat_from_vdot(const Eigen::RowVectorXd& vdot, double delta1);

struct InitialMax {
  double value = 0.0;
  Eigen::Index index = 0;  // first maximizer
};

/// max_j V(t0, xi_j).
double sup_initial(const LyapunovNet& net, const Mat& initial, double t0);
InitialMax initial_max(const LyapunovNet& net, const Mat& initial, double t0);

/// mean_i (max{sup0 - V(t_i, x_i) + delta2, 0})^2.
double l2_hat(const LyapunovNet& net, const Mat& boundary, double sup0, double delta2);
double l2_hat_from_values(const Eigen::RowVectorXd& v, double sup0, double delta2);

double total_loss(double l1, double l2, const LossConfig& cfg);

struct LossEvaluation {
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  ParamGradient grad;
};

/// Weighted loss on one mini-batch and its exact gradient with respect to
/// every parameter. The interior term is differentiated through the orbital
/// derivative; the boundary term through V at the boundary points and at the
/// maximizing initial point. An empty interior or boundary matrix drops the
/// corresponding term.
LossEvaluation loss_param_gradient(const LyapunovNet& net, const VectorField& sys,
                                   const Mat& interior_batch, const Mat& boundary,
                                   const Mat& initial, double t0,
                                   const LossConfig& cfg);

}  // namespace fts

#endif  // FTS_LOSS_HPP
