#ifndef FTS_TESTS_SUPPORT_HPP
#define FTS_TESTS_SUPPORT_HPP

#include "fts/domains.hpp"
#include "fts/dynamics.hpp"
#include "fts/network.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fts::testing {

inline DomainSpec ex1_domain() {
  DomainSpec d;
  d.initial.r_matrix = 0.3 * Mat::Identity(2, 2);
  d.trajectory = make_constant_family(0.25 * Mat::Identity(2, 2));
  d.t0 = 0.0;
  d.horizon = 1.0;
  return d;
}

inline DomainSpec ex2_domain() {
  DomainSpec d;
  d.initial.r_matrix = Mat::Identity(2, 2);
  d.trajectory = make_ex2_scalar_mu_family(2, 0.8, 0.1, 1.0, 0.0);
  d.t0 = 0.0;
  d.horizon = 1.0;
  return d;
}

inline DomainSpec ex3_domain() {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  DomainSpec d;
  d.initial.r_matrix = (4.0 / pi2) * Mat::Identity(2, 2);
  Vec diag0(2), rates(2);
  diag0 << 2.0 / pi2, 0.1 / pi2;
  rates << 0.5, 2.0;
  d.trajectory = make_ex3_rotating_diag_family(diag0, rates, 0.2 * std::numbers::pi);
  d.t0 = 0.0;
  d.horizon = 2.0;
  return d;
}

/// |x| <= 1 inside |x| < 1.2 over [0, 1].
inline DomainSpec negative_domain() {
  DomainSpec d;
  d.initial.r_matrix = Mat::Identity(1, 1);
  d.trajectory = make_constant_family(Mat::Constant(1, 1, 1.0 / 1.44));
  d.t0 = 0.0;
  d.horizon = 1.0;
  return d;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Net with parameters drawn from N(0, scale^2), so biases are nonzero too.
inline LyapunovNet random_net(const std::vector<int>& dims, std::uint64_t seed,
                              double scale = 0.7) {
  LyapunovNet net = init_net(dims, seed);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> nd(0.0, scale);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()(i) = nd(rng);
  return net;
}

/// Planar net V = sum_k s(w u_k.x) + s(-w u_k.x) - c t over `dirs` evenly
/// spread directions: even, convex and nearly radial, so x . grad V >= 0.
inline LyapunovNet radial_net(int dirs, double w, double c) {
  LyapunovNet net = init_net({3, 2 * dirs + 1, 1}, 1);
  net.params().setZero();
  for (int k = 0; k < dirs; ++k) {
    double th = std::numbers::pi * k / dirs;
    for (int sgn = 0; sgn < 2; ++sgn) {
      int u = 2 * k + sgn;
      double s = sgn == 0 ? w : -w;
      net.weight(0)(u, 1) = s * std::cos(th);
      net.weight(0)(u, 2) = s * std::sin(th);
      net.weight(1)(0, u) = 1.0;
    }
  }
  // Last unit carries -c t through softplus' linear regime.
  int last = 2 * dirs;
  net.weight(0)(last, 0) = 1.0;
  net.bias(0)(last) = 60.0;
  net.weight(1)(0, last) = -c;
  return net;
}

}  // namespace fts::testing

#endif  // FTS_TESTS_SUPPORT_HPP
