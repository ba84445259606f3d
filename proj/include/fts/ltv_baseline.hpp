#ifndef FTS_LTV_BASELINE_HPP
#define FTS_LTV_BASELINE_HPP

#include "fts/domains.hpp"
#include "fts/network.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fts {

using MatrixFn = std::function<Mat(double)>;

/// V(t, x) = x' P(t) x. P is symmetrized on every access.
class QuadraticForm {
 public:
  QuadraticForm() = default;

  static QuadraticForm constant(const Mat& p);
  /// Time-varying P; the derivative is a central difference with step h.
  static QuadraticForm function(int n, MatrixFn p, double h = 1e-6);
  /// Piecewise-linear interpolation between per-slice matrices. The derivative
  /// is the finite difference across neighbouring slices.
  static QuadraticForm slices(std::vector<double> times, std::vector<Mat> mats);

  int dim() const { return n_; }
  bool is_constant() const { return kind_ == Kind::constant; }
  Mat p(double t) const;
  Mat p_dot(double t) const;
  double value(double t, const Vec& x) const { return x.dot(p(t) * x); }

 private:
  enum class Kind { constant, function, slices };
  Kind kind_ = Kind::constant;
  int n_ = 0;
  Mat fixed_;
  MatrixFn fn_;
  double h_ = 1e-6;
  std::vector<double> times_;
  std::vector<Mat> mats_;
};

struct QuadraticFit {
  QuadraticForm form;
  double rms_residual = 0.0;
};

/// Least squares of V(t, x) - V(t, 0) against the monomials x_i x_j over the
/// given states (one per column). Needs at least n(n+1)/2 + 1 points; throws
/// FitError on a rank-deficient design.
QuadraticFit quadratic_fit(const LyapunovNet& net, const Mat& states, double t);
/// Same fit for an arbitrary scalar function of the state.
QuadraticFit quadratic_fit(const std::function<double(const Vec&)>& v, const Mat& states);
/// Same fit on m points drawn uniformly from the closure of Omega_t.
QuadraticFit quadratic_fit_on_domain(const LyapunovNet& net, const DomainSpec& dom,
                                     double t, std::size_t m, std::uint64_t rng_seed);
/// One constant fit per time in `times`, joined piecewise-linearly.
QuadraticForm quadratic_fit_slices(const LyapunovNet& net, const DomainSpec& dom,
                                   const std::vector<double>& times, std::size_t m,
                                   std::uint64_t rng_seed);

struct DlmiSample {
  double t = 0.0;
  double max_eig_derivative = 0.0;  // lambda_max(Pdot + A'P + PA)
  double min_eig_gap = 0.0;         // lambda_min(P - Gamma)
};

struct DlmiReport {
  std::vector<DlmiSample> samples;
  double max_eig_initial = 0.0;  // lambda_max(P(t0) - R)
  bool derivative_ok = false;    // all max_eig_derivative < 0
  bool gap_ok = false;           // all min_eig_gap > 0
  bool initial_ok = false;       // max_eig_initial < 0
  bool passed = false;
};

/// Pointwise checks of the three matrix inequalities on the grid; the first
/// grid point is taken as t0. Gamma and R must be symmetric.
DlmiReport check_dlmi(const QuadraticForm& p, const MatrixFn& a, const MatrixFn& gamma,
                      const Mat& r, const std::vector<double>& grid);

std::string dlmi_report_json(const DlmiReport& report);

/// Ascending eigenvalues of (m + m') / 2.
Vec sym_eigenvalues(const Mat& m);

/// Output layer weights and bias times beta, so V and Vdot scale by beta.
LyapunovNet scale_lyapunov(const LyapunovNet& net, double beta);
QuadraticForm scale_lyapunov(const QuadraticForm& form, double beta);

struct ScaleInterval {
  double lower = 0.0;  // beta P(t) > Gamma(t) on the grid iff beta > lower
  double upper = 0.0;  // beta P(t0) < R iff beta < upper
  bool nonempty() const { return lower < upper; }
  double midpoint() const { return 0.5 * (lower + upper); }
};

/// Range of scalings that make the gap and initial conditions hold. Throws
/// InputError when P is not positive definite on the grid.
ScaleInterval scale_interval(const QuadraticForm& p, const MatrixFn& gamma, const Mat& r,
                             const std::vector<double>& grid);

struct TransitionQ {
  std::vector<double> times;
  std::vector<Mat> q;
  double max_condition = 1.0;  // of phi(t, t0) over the grid
  std::vector<std::string> warnings;
};

/// Q(t) = phi(t0, t)' R phi(t0, t), with phi(t, t0) integrated by RK4
/// (step dt) and inverted. times must start at t0 and be increasing.
TransitionQ state_transition_q(const MatrixFn& a, const Mat& r,
                               const std::vector<double>& times, double dt = 1e-3);

/// P(t) = (1 - eps) Q(t) on the sampled grid.
QuadraticForm certificate_from_q(const TransitionQ& q, double eps = 1e-3);

/// t0, t0 + dt, ..., t1 (last point exactly t1).
std::vector<double> uniform_grid(double t0, double t1, double dt);

}  // namespace fts

#endif  // FTS_LTV_BASELINE_HPP
