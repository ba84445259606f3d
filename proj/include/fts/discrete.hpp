#ifndef FTS_DISCRETE_HPP
#define FTS_DISCRETE_HPP

#include "fts/domains.hpp"
#include "fts/dynamics.hpp"
#include "fts/network.hpp"

#include <string>
#include <vector>

namespace fts {

/// Omega_0 = {x' R x <= 1} and Omega_k = {x' Gamma_k x < 1} for k = 0..N.
struct DiscreteDomainSeq {
  InitialSet omega0;
  std::vector<Mat> gamma;

  int horizon() const { return static_cast<int>(gamma.size()) - 1; }
  int dim() const { return omega0.dim(); }
  double level(int k, const Vec& x) const { return x.dot(gamma.at(k) * x); }

  /// Throws DomainError unless every Gamma_k is positive definite and
  /// Omega_0 lies inside the k = 0 snapshot; InputError on shape problems.
  void validate() const;
};

/// Omega_k = {||x|| < r_k} with r_k = r0 * ratio^k.
DiscreteDomainSeq make_geometric_balls(int n, double r_initial, double r0, double ratio,
                                       int horizon);

DiscreteMap make_scaling_map(int n, double factor);

enum class ForwardTag { escaped_image, boundary_image };

/// Sampled surrogate of Omega_k^fwd: (a) images of closure points that land
/// outside Omega_{k+1}, then (b) images of boundary points.
struct ForwardSample {
  Mat points;     // images, one per column
  Mat preimages;  // the points of the closure of Omega_k they came from
  std::vector<ForwardTag> tags;

  std::size_t count(ForwardTag tag) const;
};

ForwardSample forward_set_sample(const DiscreteMap& map, const DiscreteDomainSeq& seq, int k,
                                 std::size_t m, std::uint64_t rng_seed);

using DiscreteV = std::function<double(int, const Vec&)>;

/// V(k, x) = net(t = k, x).
DiscreteV discrete_v_from_net(const LyapunovNet& net);

/// Points used by the discrete verifier, kept explicit so callers can subset them.
struct DtSamples {
  std::vector<Mat> interior;  // per k < N: points of Omega_k
  Mat initial;                // points of Omega_0 (boundary ring included)
  std::vector<ForwardSample> forward;  // per k < N
};

DtSamples sample_dt(const DiscreteMap& map, const DiscreteDomainSeq& seq, std::size_t m,
                    std::uint64_t rng_seed);

struct DtViolation {
  enum class Kind { increase, gap } kind = Kind::increase;
  int k = 0;
  Vec x;
  double value = 0.0;  // dV(k, x), or sup0 - V(k + 1, x)
};

struct DtVerdict {
  bool passed = false;
  bool decrease_ok = false;  // dV <= 0 on every interior sample
  bool gap_ok = false;       // sup over initial samples < inf over forward samples
  double sup_initial = 0.0;
  double inf_forward = 0.0;  // +inf when no forward points were sampled
  std::size_t n_decrease_checks = 0;
  std::size_t n_forward_points = 0;
  std::vector<DtViolation> violations;
};

DtVerdict check_dt_on_samples(const DiscreteV& v, const DiscreteMap& map,
                              const DiscreteDomainSeq& seq, const DtSamples& samples);
/// dV(k, x) = V(k+1, f(k, x)) - V(k, x) <= 0 on m samples of each Omega_k, and
/// max V(0, .) over Omega_0 samples < min V(k+1, .) over the forward samples.
DtVerdict check_dt_conditions(const DiscreteV& v, const DiscreteMap& map,
                              const DiscreteDomainSeq& seq, std::size_t m,
                              std::uint64_t rng_seed);

std::string dt_verdict_json(const DtVerdict& verdict);

}  // namespace fts

#endif  // FTS_DISCRETE_HPP
