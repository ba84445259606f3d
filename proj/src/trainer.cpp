#include "fts/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fts {

void adam_step(Vec& params, const Vec& grad, AdamState& state, const AdamConfig& cfg) {
  if (grad.size() != params.size()) throw InputError("adam_step: gradient shape mismatch");
  if (state.m.size() != params.size()) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
  }
  const double lr = cfg.lr0 / (1.0 + cfg.lr_decay * static_cast<double>(state.step));
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  params.array() -= lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + cfg.epsilon);
}

Seeds Seeds::from_base(std::uint64_t base) {
  return {derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2),
          derive_seed(base, 3)};
}

std::vector<int> layer_dims_for(int state_dim, const std::vector<int>& hidden) {
  std::vector<int> dims{state_dim + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  validate_layer_dims(dims);
  return dims;
}

CollocationSet build_collocation(const DomainSpec& dom, const CollocationSizes& sizes,
                                 std::uint64_t sampler_seed) {
  return {sample_interior(dom, sizes.nc, derive_seed(sampler_seed, 0)),
          sample_boundary(dom, sizes.n_t, sizes.n_b, derive_seed(sampler_seed, 1)),
          sample_initial(dom, sizes.n0, derive_seed(sampler_seed, 2))};
}

namespace {

// Fixed chunk width so results do not depend on the number of workers.
constexpr Eigen::Index kChunk = 512;

template <class F>
Eigen::RowVectorXd chunked(const Mat& inputs, int threads, F&& eval) {
  Eigen::RowVectorXd out(inputs.cols());
  const auto chunks = static_cast<std::size_t>((inputs.cols() + kChunk - 1) / kChunk);
  parallel_for(chunks, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      Eigen::Index start = static_cast<Eigen::Index>(c) * kChunk;
      Eigen::Index width = std::min(kChunk, inputs.cols() - start);
      out.segment(start, width) = eval(inputs.middleCols(start, width));
    }
  });
  return out;
}

Eigen::RowVectorXd values(const LyapunovNet& net, const Mat& inputs, int threads) {
  return chunked(inputs, threads, [&](const Mat& block) { return forward_batch(net, block); });
}

Eigen::RowVectorXd vdots(const LyapunovNet& net, const VectorField& sys, const Mat& inputs,
                         int threads) {
  return chunked(inputs, threads, [&](const Mat& block) {
    return orbital_derivative_batch(net, sys, block);
  });
}

Mat timed(const Mat& states, double t0) {
  Mat in(states.rows() + 1, states.cols());
  in.row(0).setConstant(t0);
  in.bottomRows(states.rows()) = states;
  return in;
}

struct FullEvaluation {
  TerminationDetail detail;
  Eigen::RowVectorXd vdot;
  Eigen::RowVectorXd boundary_v;
};

FullEvaluation evaluate_full(const LyapunovNet& net, const VectorField& sys,
                             const CollocationSet& colloc, double t0, int threads) {
  FullEvaluation ev;
  ev.vdot = vdots(net, sys, colloc.interior, threads);
  ev.boundary_v = values(net, colloc.boundary, threads);
  Eigen::RowVectorXd v0 = values(net, timed(colloc.initial, t0), threads);
  TerminationDetail& d = ev.detail;
  d.sup0 = v0.maxCoeff();
  d.max_vdot = ev.vdot.size() ? ev.vdot.maxCoeff() : 0.0;
  d.min_boundary_value = ev.boundary_v.minCoeff();
  for (Eigen::Index i = 0; i < ev.vdot.size(); ++i) {
    if (!(ev.vdot(i) <= 0.0)) ++d.interior_violations;
  }
  for (Eigen::Index i = 0; i < ev.boundary_v.size(); ++i) {
    if (!(d.sup0 - ev.boundary_v(i) < 0.0)) ++d.boundary_violations;
  }
  d.terminated = d.interior_violations == 0 && d.boundary_violations == 0;
  return ev;
}

}  // namespace

TerminationDetail check_termination(const LyapunovNet& net, const VectorField& sys,
                                    const CollocationSet& colloc, double t0, int threads) {
  return evaluate_full(net, sys, colloc, t0, threads).detail;
}

TestSet build_test_set(const DomainSpec& dom, const TestConfig& cfg, std::uint64_t seed) {
  const int n = dom.dim();
  if (cfg.grid < 2) throw InputError("test grid needs at least 2 points per axis");
  if (cfg.time_slices < 2) throw InputError("test set needs at least 2 time slices");
  const double cells = std::pow(static_cast<double>(cfg.grid), n);
  if (cells > 1e7) throw InputError("test grid too large for this state dimension");

  // Visits every node of a grid^n lattice over a box.
  auto lattice = [&](const std::pair<Vec, Vec>& box, const std::function<void(const Vec&)>& visit) {
    std::vector<std::size_t> idx(n, 0);
    Vec x(n);
    while (true) {
      for (int i = 0; i < n; ++i) {
        x(i) = box.first(i) + (box.second(i) - box.first(i)) * static_cast<double>(idx[i]) /
                                  static_cast<double>(cfg.grid - 1);
      }
      visit(x);
      int k = 0;
      while (k < n && ++idx[k] == cfg.grid) idx[k++] = 0;
      if (k == n) break;
    }
  };

  TestSet ts;
  std::vector<Vec> interior;
  for (std::size_t s = 0; s < cfg.time_slices; ++s) {
    double t = (s + 1 == cfg.time_slices)
                   ? dom.t_end()
                   : dom.t0 + dom.horizon * static_cast<double>(s) /
                                  static_cast<double>(cfg.time_slices - 1);
    lattice(dom.trajectory->bounding_box(t), [&](const Vec& x) {
      if (dom.trajectory->in_closure(t, x)) {
        Vec p(n + 1);
        p(0) = t;
        p.tail(n) = x;
        interior.push_back(std::move(p));
      }
    });
  }
  ts.interior.resize(n + 1, static_cast<Eigen::Index>(interior.size()));
  for (std::size_t j = 0; j < interior.size(); ++j) ts.interior.col(j) = interior[j];

  ts.boundary = sample_boundary(dom, cfg.time_slices, cfg.n_b, seed);

  Eigen::LLT<Mat> llt(dom.initial.r_matrix);
  Vec half = llt.solve(Mat::Identity(n, n)).diagonal().cwiseSqrt();
  std::vector<Vec> initial;
  lattice({-half, half}, [&](const Vec& x) {
    if (dom.initial.level(x) <= 1.0) initial.push_back(x);
  });
  Mat ring = initial_ring(dom.initial, cfg.initial_ring);
  ts.initial.resize(n, static_cast<Eigen::Index>(initial.size()) + ring.cols());
  for (std::size_t j = 0; j < initial.size(); ++j) ts.initial.col(j) = initial[j];
  ts.initial.rightCols(ring.cols()) = ring;
  return ts;
}

TestVerdict verify_on_points(const LyapunovNet& net, const VectorField& sys,
                             const TestSet& test, double t0, int threads) {
  TestVerdict verdict;
  verdict.n_interior = static_cast<std::size_t>(test.interior.cols());
  verdict.n_boundary = static_cast<std::size_t>(test.boundary.cols());
  verdict.n_initial = static_cast<std::size_t>(test.initial.cols());
  const int n = net.state_dim();

  Eigen::RowVectorXd vd = vdots(net, sys, test.interior, threads);
  Eigen::RowVectorXd vb = values(net, test.boundary, threads);
  verdict.sup0 = values(net, timed(test.initial, t0), threads).maxCoeff();

  for (Eigen::Index j = 0; j < vd.size(); ++j) {
    if (!(vd(j) <= 0.0)) {
      ++verdict.interior_violations;
      verdict.violations.push_back(
          {Violation::Kind::interior, test.interior(0, j), test.interior.col(j).tail(n), vd(j)});
    }
  }
  for (Eigen::Index j = 0; j < vb.size(); ++j) {
    double gap = verdict.sup0 - vb(j);
    if (!(gap < 0.0)) {
      ++verdict.boundary_violations;
      verdict.violations.push_back(
          {Violation::Kind::boundary, test.boundary(0, j), test.boundary.col(j).tail(n), gap});
    }
  }
  verdict.passed = verdict.violations.empty();
  return verdict;
}

TestVerdict verify_on_test_set(const LyapunovNet& net, const VectorField& sys,
                               const DomainSpec& dom, const TestConfig& cfg,
                               std::uint64_t seed, int threads) {
  if (net.state_dim() != dom.dim() || sys.dim != dom.dim()) {
    throw InputError("network, system and domain dimensions disagree");
  }
  return verify_on_points(net, sys, build_test_set(dom, cfg, seed), dom.t0, threads);
}

namespace {

void append_violations(CollocationSet& colloc, const TestVerdict& verdict) {
  std::vector<const Violation*> in, bd;
  for (const auto& v : verdict.violations) {
    (v.kind == Violation::Kind::interior ? in : bd).push_back(&v);
  }
  auto grow = [](Mat& m, const std::vector<const Violation*>& pts) {
    if (pts.empty()) return;
    Eigen::Index old = m.cols();
    m.conservativeResize(Eigen::NoChange, old + static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) {
      m(0, old + j) = pts[j]->t;
      m.col(old + j).tail(pts[j]->x.size()) = pts[j]->x;
    }
  };
  grow(colloc.interior, in);
  grow(colloc.boundary, bd);
}

}  // namespace

TrainResult train(const VectorField& sys, const DomainSpec& dom, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  const auto start = std::chrono::steady_clock::now();
  tune_allocator();
  cfg.loss.validate();
  if (cfg.max_epochs < 1) throw InputError("max_epochs must be >= 1");
  if (sys.dim != dom.dim()) throw InputError("system/domain dimension mismatch");
  WellPosedness wp = wellposed_check(dom);
  if (!wp.ok) {
    throw InputError("domain is not well posed (margin " + format_double(wp.margin) + ")");
  }

  TrainResult result;
  TrainReport& report = result.report;
  report.seeds = cfg.seeds;
  result.net = init_net(layer_dims_for(dom.dim(), cfg.hidden), cfg.seeds.net);
  LyapunovNet& net = result.net;

  CollocationSet colloc = build_collocation(dom, cfg.sizes, cfg.seeds.sampler);
  AdamState adam;
  std::mt19937_64 shuffle_rng(cfg.seeds.shuffle);
  const int n = dom.dim();

  for (int round = 0;; ++round) {
    const auto nc = static_cast<std::size_t>(colloc.interior.cols());
    const std::size_t batch_size =
        cfg.minibatch_size > 0
            ? cfg.minibatch_size
            : (nc + std::max<std::size_t>(cfg.n_minibatches, 1) - 1) /
                  std::max<std::size_t>(cfg.n_minibatches, 1);
    std::vector<Eigen::Index> perm(nc);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    bool terminated = false;

    // Augmentation rounds draw from the same epoch budget.
    while (report.epochs_run < cfg.max_epochs) {
      std::shuffle(perm.begin(), perm.end(), shuffle_rng);
      for (std::size_t begin = 0; begin < nc; begin += batch_size) {
        std::size_t width = std::min(batch_size, nc - begin);
        Mat batch(n + 1, static_cast<Eigen::Index>(width));
        for (std::size_t j = 0; j < width; ++j) batch.col(j) = colloc.interior.col(perm[begin + j]);
        LossEvaluation ev = loss_param_gradient(net, sys, batch, colloc.boundary,
                                                colloc.initial, dom.t0, cfg.loss);
        if (!std::isfinite(ev.total) || !ev.grad.flat.allFinite()) {
          throw TrainingAborted("non-finite loss at epoch " + std::to_string(report.epochs_run + 1) +
                                ", batch starting at " + std::to_string(begin));
        }
        adam_step(net.params(), ev.grad.flat, adam, cfg.adam);
      }
      ++report.epochs_run;

      FullEvaluation full = evaluate_full(net, sys, colloc, dom.t0, cfg.threads);
      EpochRecord rec;
      rec.epoch = report.epochs_run;
      rec.l1 = l1_hat_from_vdot(full.vdot, cfg.loss.delta1);
      rec.l2 = l2_hat_from_values(full.boundary_v, full.detail.sup0, cfg.loss.delta2);
      rec.loss = total_loss(rec.l1, rec.l2, cfg.loss);
      rec.interior_violations = full.detail.interior_violations;
      rec.boundary_violations = full.detail.boundary_violations;
      if (!std::isfinite(rec.loss)) {
        throw TrainingAborted("non-finite full-set loss after epoch " + std::to_string(rec.epoch));
      }
      report.loss_curve.push_back(rec);
      report.termination = full.detail;
      if (on_epoch) on_epoch(rec);
      if (full.detail.terminated) {
        terminated = true;
        break;
      }
    }

    report.terminated = terminated;
    report.status = terminated ? "terminated" : "max_epochs";
    report.test = verify_on_test_set(net, sys, dom, cfg.test, cfg.seeds.test, cfg.threads);
    if (!terminated || report.test.passed || round >= cfg.augment_retry) break;
    append_violations(colloc, report.test);
    ++report.augment_rounds;
  }

  report.wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string loss_curve_csv(const std::vector<EpochRecord>& curve) {
  std::ostringstream out;
  out << "epoch,loss,l1,l2,interior_violations,boundary_violations\n";
  for (const auto& r : curve) {
    out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.l1) << ','
        << format_double(r.l2) << ',' << r.interior_violations << ',' << r.boundary_violations
        << '\n';
  }
  return out.str();
}

std::string report_json(const TrainReport& report) {
  using nlohmann::json;
  constexpr std::size_t kMaxListed = 100;
  json curve = json::array();
  for (const auto& r : report.loss_curve) {
    curve.push_back({{"epoch", r.epoch},
                     {"loss", r.loss},
                     {"l1", r.l1},
                     {"l2", r.l2},
                     {"interior_violations", r.interior_violations},
                     {"boundary_violations", r.boundary_violations}});
  }
  json listed = json::array();
  for (std::size_t i = 0; i < report.test.violations.size() && i < kMaxListed; ++i) {
    const auto& v = report.test.violations[i];
    listed.push_back({{"kind", v.kind == Violation::Kind::interior ? "interior" : "boundary"},
                      {"t", v.t},
                      {"x", std::vector<double>(v.x.data(), v.x.data() + v.x.size())},
                      {"value", v.value}});
  }
  json doc = {
      {"terminated", report.terminated},
      {"status", report.status},
      {"certified", report.certified()},
      {"epochs_run", report.epochs_run},
      {"augment_rounds", report.augment_rounds},
      {"termination_detail",
       {{"interior_violations", report.termination.interior_violations},
        {"boundary_violations", report.termination.boundary_violations},
        {"sup_initial", report.termination.sup0},
        {"max_vdot", report.termination.max_vdot},
        {"min_boundary_value", report.termination.min_boundary_value}}},
      {"test_verdict",
       {{"passed", report.test.passed},
        {"n_interior", report.test.n_interior},
        {"n_boundary", report.test.n_boundary},
        {"n_initial", report.test.n_initial},
        {"interior_violations", report.test.interior_violations},
        {"boundary_violations", report.test.boundary_violations},
        {"sup_initial", report.test.sup0},
        {"violations", listed}}},
      {"loss_curve", curve},
      {"wall_clock_seconds", report.wall_clock},
      {"seeds",
       {{"net", report.seeds.net},
        {"sampler", report.seeds.sampler},
        {"shuffle", report.seeds.shuffle},
        {"test", report.seeds.test}}}};
  return doc.dump(2) + "\n";
}

}  // namespace fts
