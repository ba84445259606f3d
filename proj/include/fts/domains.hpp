#ifndef FTS_DOMAINS_HPP
#define FTS_DOMAINS_HPP

#include "fts/common.hpp"

#include <memory>
#include <random>
#include <string>
#include <utility>

namespace fts {

/// A time-varying trajectory domain Omega_t described through a gauge
/// ("level") function: the open set is {level < 1}, its boundary {level == 1}.
/// Samplers only rely on this interface, so non-ellipsoidal shapes can be
/// plugged in without touching the trainer.
class TrajectoryFamily {
 public:
  virtual ~TrajectoryFamily() = default;

  virtual int dim() const = 0;
  virtual double level(double t, const Vec& x) const = 0;
  /// m points on the boundary at time t, one per column.
  virtual Mat boundary_sample(double t, std::size_t m,
                              std::mt19937_64& rng) const = 0;
  /// Axis-aligned box (lower, upper) enclosing the closure at time t.
  virtual std::pair<Vec, Vec> bounding_box(double t) const = 0;

  bool in_closure(double t, const Vec& x) const { return level(t, x) <= 1.0; }
};

/// Omega_t = {x : x' Gamma(t) x < 1}.
class EllipsoidFamily final : public TrajectoryFamily {
 public:
  EllipsoidFamily(int n, std::function<Mat(double)> gamma, std::string label);

  int dim() const override { return n_; }
  double level(double t, const Vec& x) const override;
  Mat boundary_sample(double t, std::size_t m,
                      std::mt19937_64& rng) const override;
  std::pair<Vec, Vec> bounding_box(double t) const override;

  /// Gamma(t), symmetrized. Throws DomainError when not positive definite.
  Mat gamma(double t) const;
  const std::string& label() const { return label_; }

 private:
  int n_;
  std::function<Mat(double)> gamma_;
  std::string label_;
};

std::shared_ptr<const EllipsoidFamily> make_constant_family(const Mat& gamma);
/// Gamma(t) = scale * k * mu(t) * I with mu(t) = r0^2 + (1/k - r0^2) e^{2(t - t0)}.
std::shared_ptr<const EllipsoidFamily> make_ex2_scalar_mu_family(
    int n, double scale, double k, double r0, double t0);
/// Gamma(t) = Theta(t) diag(d_i e^{c_i t}) Theta(t)' with Theta the planar
/// rotation [[cos wt, sin wt], [-sin wt, cos wt]].
std::shared_ptr<const EllipsoidFamily> make_ex3_rotating_diag_family(
    const Vec& diag0, const Vec& rates, double omega);

/// Omega_0 = {x : x' R x <= 1}.
struct InitialSet {
  Mat r_matrix;

  int dim() const { return static_cast<int>(r_matrix.rows()); }
  double level(const Vec& x) const { return x.dot(r_matrix * x); }
};

struct DomainSpec {
  InitialSet initial;
  std::shared_ptr<const TrajectoryFamily> trajectory;
  double t0 = 0.0;
  double horizon = 1.0;

  int dim() const { return initial.dim(); }
  double t_end() const { return t0 + horizon; }
};

enum class Membership { initial, trajectory, trajectory_closure };

bool contains(const DomainSpec& dom, double t, const Vec& x, Membership which);

struct WellPosedness {
  bool ok = false;
  double margin = 0.0;
};

/// Ellipsoids: lambda_min(R - Gamma(t0)). Other families: sampled margin of
/// the initial-set boundary inside Omega_{t0}.
WellPosedness wellposed_check(const DomainSpec& dom);

/// Uniform directions on the unit sphere, one per column. In one dimension the
/// directions alternate +1, -1 so both boundary points appear when m >= 2.
Mat sphere_directions(int n, std::size_t m, std::mt19937_64& rng);

/// Symmetric inverse square root of an SPD matrix.
Mat inverse_sqrt_spd(const Mat& m);

// Collocation samplers. Timed points are stored column-wise as [t; x].

/// n_c points with t uniform in J and x uniform in the closure of Omega_t.
Mat sample_interior(const DomainSpec& dom, std::size_t n_c,
                    std::uint64_t rng_seed);
/// n_t equally spaced instants over [t0, t0 + T] inclusive, n_b_per_t
/// boundary points at each.
Mat sample_boundary(const DomainSpec& dom, std::size_t n_t,
                    std::size_t n_b_per_t, std::uint64_t rng_seed);
/// n_0 points in Omega_0 (no time row): a deterministic ring on the boundary
/// followed by uniform draws.
Mat sample_initial(const DomainSpec& dom, std::size_t n_0,
                   std::uint64_t rng_seed);
/// Deterministic points on the initial-set boundary.
Mat initial_ring(const InitialSet& init, std::size_t count);
std::size_t initial_ring_size(int n, std::size_t n_0);

}  // namespace fts

#endif  // FTS_DOMAINS_HPP
