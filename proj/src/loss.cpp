#include "fts/loss.hpp"

#include <cmath>

namespace fts {

void LossConfig::validate() const {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) throw InputError("loss weights must be positive");
  if (!(delta2 > 0.0)) throw InputError("delta2 must be positive");
  if (!(delta1 >= 0.0)) throw InputError("delta1 must be non-negative");
}

double l1_hat_from_vdot(const Eigen::RowVectorXd& vdot, double delta1) {
  if (vdot.size() == 0) throw InputError("l1_hat on an empty point set");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < vdot.size(); ++i) {
    double h = std::max(vdot(i) + delta1, 0.0);
    sum += h * h;
  }
  return sum / static_cast<double>(vdot.size());
}

double l1_hat(const LyapunovNet& net, const VectorField& sys, const Mat& points,
              double delta1) {
  if (points.cols() == 0) throw InputError("l1_hat on an empty point set");
  return l1_hat_from_vdot(orbital_derivative_batch(net, sys, points), delta1);
}

namespace {

constexpr Eigen::Index kBoundaryChunk = 256;

Mat timed(const Mat& states, double t0) {
  Mat in(states.rows() + 1, states.cols());
  in.row(0).setConstant(t0);
  in.bottomRows(states.rows()) = states;
  return in;
}

}  // namespace

InitialMax initial_max(const LyapunovNet& net, const Mat& initial, double t0) {
  if (initial.cols() == 0) throw InputError("sup_initial on an empty point set");
  Eigen::RowVectorXd v = forward_batch(net, timed(initial, t0));
  InitialMax best{v(0), 0};
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v(j) > best.value) best = {v(j), j};
  }
  return best;
}

double sup_initial(const LyapunovNet& net, const Mat& initial, double t0) {
  return initial_max(net, initial, t0).value;
}

double l2_hat_from_values(const Eigen::RowVectorXd& v, double sup0, double delta2) {
  if (v.size() == 0) throw InputError("l2_hat on an empty boundary set");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double h = std::max(sup0 - v(i) + delta2, 0.0);
    sum += h * h;
  }
  return sum / static_cast<double>(v.size());
}

double l2_hat(const LyapunovNet& net, const Mat& boundary, double sup0, double delta2) {
  if (boundary.cols() == 0) throw InputError("l2_hat on an empty boundary set");
  return l2_hat_from_values(forward_batch(net, boundary), sup0, delta2);
}

double total_loss(double l1, double l2, const LossConfig& cfg) {
  return cfg.alpha1 * l1 + cfg.alpha2 * l2;
}

LossEvaluation loss_param_gradient(const LyapunovNet& net, const VectorField& sys,
                                   const Mat& interior_batch, const Mat& boundary,
                                   const Mat& initial, double t0,
                                   const LossConfig& cfg) {
  LossEvaluation out;
  out.grad.flat = Vec::Zero(net.params().size());

  if (interior_batch.cols() > 0) {
    Mat dirs = field_directions(sys, interior_batch);
    ForwardTape tape = forward_tape(net, interior_batch, &dirs);
    const auto b = static_cast<double>(interior_batch.cols());
    Eigen::RowVectorXd tadj(tape.tangent.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < tadj.size(); ++i) {
      double h = std::max(tape.tangent(i) + cfg.delta1, 0.0);
      sum += h * h;
      tadj(i) = cfg.alpha1 * 2.0 * h / b;
    }
    out.l1 = sum / b;
    if (out.l1 > 0.0) {
      Eigen::RowVectorXd vadj = Eigen::RowVectorXd::Zero(tadj.size());
      out.grad.flat += backprop(net, tape, vadj, &tadj).flat;
    }
  }

  if (boundary.cols() > 0) {
    const InitialMax best = initial_max(net, initial, t0);
    const double sup0 = best.value;
    const auto nb = static_cast<double>(boundary.cols());
    double sum = 0.0;
    double sup_adj = 0.0;
    // Chunked so the per-layer temporaries stay cache resident.
    for (Eigen::Index start = 0; start < boundary.cols(); start += kBoundaryChunk) {
      const Eigen::Index width = std::min(kBoundaryChunk, boundary.cols() - start);
      ForwardTape tape = forward_tape(net, boundary.middleCols(start, width));
      Eigen::RowVectorXd vadj(width);
      bool active = false;
      for (Eigen::Index i = 0; i < width; ++i) {
        double h = std::max(sup0 - tape.value(i) + cfg.delta2, 0.0);
        sum += h * h;
        double g = cfg.alpha2 * 2.0 * h / nb;
        vadj(i) = -g;
        sup_adj += g;
        active = active || h > 0.0;
      }
      if (active) out.grad.flat += backprop(net, tape, vadj).flat;
    }
    out.l2 = sum / nb;
    if (sup_adj > 0.0) {
      Mat xi(initial.rows() + 1, 1);
      xi(0, 0) = t0;
      xi.col(0).tail(initial.rows()) = initial.col(best.index);
      ForwardTape tape = forward_tape(net, xi);
      out.grad.flat += backprop(net, tape, Eigen::RowVectorXd::Constant(1, sup_adj)).flat;
    }
  }

  out.total = total_loss(out.l1, out.l2, cfg);
  return out;
}

}  // namespace fts
