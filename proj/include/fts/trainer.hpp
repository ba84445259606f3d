#ifndef FTS_TRAINER_HPP
#define FTS_TRAINER_HPP

#include "fts/domains.hpp"
#include "fts/loss.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fts {

struct AdamConfig {
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr_decay = 0.0;  // lr_k = lr0 / (1 + lr_decay * k)
};

struct AdamState {
  Vec m;
  Vec v;
  std::size_t step = 0;  // number of updates applied so far
};

/// One Adam update with bias correction. Uses lr0 / (1 + lr_decay * step).
void adam_step(Vec& params, const Vec& grad, AdamState& state, const AdamConfig& cfg);

struct CollocationSizes {
  std::size_t nc = 5000;
  std::size_t n_b = 500;  // boundary points per time instant
  std::size_t n_t = 11;   // boundary time instants
  std::size_t n0 = 200;
};

struct Seeds {
  std::uint64_t net = 1;
  std::uint64_t sampler = 2;
  std::uint64_t shuffle = 3;
  std::uint64_t test = 4;

  /// All four streams derived from one base seed.
  static Seeds from_base(std::uint64_t base);
};

struct TestConfig {
  std::size_t grid = 50;          // points per state axis
  std::size_t time_slices = 21;
  std::size_t n_b = 1000;         // fresh boundary points per slice
  std::size_t initial_ring = 720;
};

struct TrainConfig {
  LossConfig loss;
  std::vector<int> hidden{128};
  std::size_t n_minibatches = 100;
  std::size_t minibatch_size = 0;  // when > 0, overrides n_minibatches
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 1e-5};
  std::size_t max_epochs = 500;
  CollocationSizes sizes;
  Seeds seeds;
  TestConfig test;
  int threads = 1;
  int augment_retry = 0;
};

CollocationSet build_collocation(const DomainSpec& dom, const CollocationSizes& sizes,
                                 std::uint64_t sampler_seed);

struct TerminationDetail {
  bool terminated = false;
  std::size_t interior_violations = 0;  // vdot > 0
  std::size_t boundary_violations = 0;  // sup0 - V >= 0
  double sup0 = 0.0;
  double max_vdot = 0.0;
  double min_boundary_value = 0.0;
};

/// Raw conditions at collocation resolution: vdot <= 0 at every interior point
/// and max_initial V(t0, .) < V at every boundary point. No margins.
TerminationDetail check_termination(const LyapunovNet& net, const VectorField& sys,
                                    const CollocationSet& colloc, double t0,
                                    int threads = 1);

struct Violation {
  enum class Kind { interior, boundary } kind = Kind::interior;
  double t = 0.0;
  Vec x;
  double value = 0.0;  // vdot, or sup0 - V
};

struct TestSet {
  Mat interior;
  Mat boundary;
  Mat initial;
};

/// Regular space-time grid restricted to the closed trajectory domain, fresh
/// boundary samples, and grid points of the initial set plus a fine ring.
TestSet build_test_set(const DomainSpec& dom, const TestConfig& cfg, std::uint64_t seed);

struct TestVerdict {
  bool passed = false;
  std::size_t n_interior = 0;
  std::size_t n_boundary = 0;
  std::size_t n_initial = 0;
  std::size_t interior_violations = 0;
  std::size_t boundary_violations = 0;
  double sup0 = 0.0;
  std::vector<Violation> violations;
};

TestVerdict verify_on_test_set(const LyapunovNet& net, const VectorField& sys,
                               const DomainSpec& dom, const TestConfig& cfg,
                               std::uint64_t seed, int threads = 1);
TestVerdict verify_on_points(const LyapunovNet& net, const VectorField& sys,
                             const TestSet& test, double t0, int threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  std::size_t interior_violations = 0;
  std::size_t boundary_violations = 0;
};

struct TrainReport {
  bool terminated = false;
  std::size_t epochs_run = 0;
  std::string status;  // "terminated" or "max_epochs"
  std::vector<EpochRecord> loss_curve;
  TerminationDetail termination;
  TestVerdict test;
  int augment_rounds = 0;
  double wall_clock = 0.0;
  Seeds seeds;

  bool certified() const { return terminated && test.passed; }
};

struct TrainResult {
  LyapunovNet net;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full workflow: sample collocation points, run mini-batch Adam until the
/// termination predicate holds or the epoch budget runs out, then verify on
/// a held-out test set (optionally folding failing test points back in and
/// resuming, augment_retry times).
TrainResult train(const VectorField& sys, const DomainSpec& dom, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

std::vector<int> layer_dims_for(int state_dim, const std::vector<int>& hidden);

std::string loss_curve_csv(const std::vector<EpochRecord>& curve);
std::string report_json(const TrainReport& report);

}  // namespace fts

#endif  // FTS_TRAINER_HPP
