#ifndef FTS_DYNAMICS_HPP
#define FTS_DYNAMICS_HPP

#include "fts/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fts {

struct DomainSpec;

/// Right-hand side f(t, x) of a continuous-time system dx/dt = f(t, x).
struct VectorField {
  int dim = 0;
  std::function<Vec(double, const Vec&)> eval;
  std::string label;
  /// A(t) when the field is linear, f(t, x) = A(t) x. Empty otherwise.
  std::function<Mat(double)> linear_part;

  bool is_linear() const { return static_cast<bool>(linear_part); }
};

/// Discrete-time map x(k+1) = step(k, x(k)).
struct DiscreteMap {
  int dim = 0;
  std::function<Vec(int, const Vec&)> step;
  std::function<Vec(int, const Vec&)> inverse;  // optional

  bool has_inverse() const { return static_cast<bool>(inverse); }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
};

/// Thrown by the integrator when a state component becomes non-finite or
/// exceeds the divergence threshold.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), blowup_time_(time) {}
  double blowup_time() const { return blowup_time_; }

 private:
  double blowup_time_;
};

inline constexpr double kDivergenceThreshold = 1e12;

Vec eval_field(const VectorField& sys, double t, const Vec& x);

/// One classical RK4 step of size h from (t, x).
Vec rk4_step(const VectorField& sys, double t, const Vec& x, double h);

/// Fixed-step RK4 over [t0, t1]; the last step is shortened to land on t1.
Trajectory integrate_rk4(const VectorField& sys, double t0, const Vec& x0,
                         double t1, double dt);

// Built-in systems.
VectorField make_linear_field(const Mat& a, std::string label = "linear");
VectorField make_zero_field(int dim);
VectorField make_ex1_lti(double rate = 0.1);
VectorField make_ex2_lakshmikantham(double k = 0.1);
VectorField make_ex3_pendulum(double g = 9.81, double m = 0.15, double l = 0.15,
                              double b = 0.1);
VectorField make_neg_scalar_exp(double rate = 1.0);

struct Counterexample {
  std::size_t sample_index = 0;
  Vec x0;
  double exit_time = 0.0;
  bool diverged = false;
};

struct OracleReport {
  bool passed = true;
  std::size_t n_samples = 0;
  std::size_t violations = 0;
  std::optional<Counterexample> counterexample;  // smallest sample index
};

/// Monte-Carlo test of the FTS implication: integrates trajectories from
/// n_samples initial states in the initial set (a deterministic ring on its
/// boundary first, then uniform draws) and reports any that leave the
/// trajectory domain over J.
OracleReport mc_fts_check(const VectorField& sys, const DomainSpec& dom,
                          std::size_t n_samples, double dt,
                          std::uint64_t rng_seed, int threads = 1);

}  // namespace fts

#endif  // FTS_DYNAMICS_HPP
