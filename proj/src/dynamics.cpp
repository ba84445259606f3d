#include "fts/dynamics.hpp"

#include "fts/domains.hpp"

#include <cmath>
#include <thread>

namespace fts {

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  std::size_t workers = threads <= 1 ? 1 : static_cast<std::size_t>(threads);
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

Vec eval_field(const VectorField& sys, double t, const Vec& x) {
  if (x.size() != sys.dim) {
    throw InputError("field '" + sys.label + "' expects dimension " +
                     std::to_string(sys.dim) + ", got " +
                     std::to_string(x.size()));
  }
  if (!std::isfinite(t)) throw InputError("non-finite time");
  return sys.eval(t, x);
}

Vec rk4_step(const VectorField& sys, double t, const Vec& x, double h) {
  Vec k1 = sys.eval(t, x);
  Vec k2 = sys.eval(t + 0.5 * h, x + 0.5 * h * k1);
  Vec k3 = sys.eval(t + 0.5 * h, x + 0.5 * h * k2);
  Vec k4 = sys.eval(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

bool diverged(const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || std::abs(x(i)) > kDivergenceThreshold) return true;
  }
  return false;
}

}  // namespace

Trajectory integrate_rk4(const VectorField& sys, double t0, const Vec& x0,
                         double t1, double dt) {
  if (!(t1 > t0)) throw InputError("integrate_rk4 needs t1 > t0");
  if (!(dt > 0.0)) throw InputError("integrate_rk4 needs dt > 0");
  if (x0.size() != sys.dim) throw InputError("initial state dimension mismatch");

  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(x0);
  double t = t0;
  Vec x = x0;
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
  for (std::size_t i = 1; i <= steps; ++i) {
    double t_next = (i == steps) ? t1 : t0 + static_cast<double>(i) * dt;
    x = rk4_step(sys, t, x, t_next - t);
    t = t_next;
    if (diverged(x)) {
      throw DivergenceError("trajectory diverged at t = " + std::to_string(t), t);
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  return traj;
}

VectorField make_linear_field(const Mat& a, std::string label) {
  VectorField f;
  f.dim = static_cast<int>(a.rows());
  f.label = std::move(label);
  f.eval = [a](double, const Vec& x) { return Vec(a * x); };
  f.linear_part = [a](double) { return a; };
  return f;
}

VectorField make_zero_field(int dim) {
  VectorField f = make_linear_field(Mat::Zero(dim, dim), "zero");
  f.eval = [dim](double, const Vec&) { return Vec(Vec::Zero(dim)); };
  return f;
}

VectorField make_ex1_lti(double rate) {
  return make_linear_field(-rate * Mat::Identity(2, 2), "ex1_lti");
}

VectorField make_ex2_lakshmikantham(double k) {
  VectorField f;
  f.dim = 2;
  f.label = "ex2_lakshmikantham";
  f.eval = [k](double, const Vec& x) {
    double r2 = x(0) * x(0) + x(1) * x(1);
    Vec dx(2);
    dx(0) = -x(0) - x(1) + k * (x(0) - x(1)) * r2;
    dx(1) = x(0) - x(1) + k * (x(0) + x(1)) * r2;
    return dx;
  };
  return f;
}

VectorField make_ex3_pendulum(double g, double m, double l, double b) {
  VectorField f;
  f.dim = 2;
  f.label = "ex3_pendulum";
  const double stiffness = g / l;
  const double damping = b / (m * l * l);
  f.eval = [stiffness, damping](double, const Vec& x) {
    Vec dx(2);
    dx(0) = x(1);
    dx(1) = -stiffness * std::sin(x(0)) - damping * x(1);
    return dx;
  };
  return f;
}

VectorField make_neg_scalar_exp(double rate) {
  return make_linear_field(Mat::Constant(1, 1, rate), "neg_scalar_exp");
}

namespace {

// Integrates one trajectory; returns the exit time if it leaves Omega_t.
std::optional<std::pair<double, bool>> first_exit(const VectorField& sys,
                                                  const DomainSpec& dom,
                                                  const Vec& x0, double dt) {
  const TrajectoryFamily& fam = *dom.trajectory;
  double t = dom.t0;
  Vec x = x0;
  double g_prev = fam.level(t, x) - 1.0;
  if (g_prev >= 0.0) return std::make_pair(t, false);
  const double t1 = dom.t_end();
  const auto steps = static_cast<std::size_t>(std::ceil(dom.horizon / dt - 1e-9));
  for (std::size_t i = 1; i <= steps; ++i) {
    double t_next = (i == steps) ? t1 : dom.t0 + static_cast<double>(i) * dt;
    x = rk4_step(sys, t, x, t_next - t);
    if (diverged(x)) return std::make_pair(t_next, true);
    double g = fam.level(t_next, x) - 1.0;
    if (g >= 0.0) {
      // Linear interpolation of the level crossing inside the last step.
      double frac = g_prev / (g_prev - g);
      return std::make_pair(t + frac * (t_next - t), false);
    }
    g_prev = g;
    t = t_next;
  }
  return std::nullopt;
}

}  // namespace

OracleReport mc_fts_check(const VectorField& sys, const DomainSpec& dom,
                          std::size_t n_samples, double dt,
                          std::uint64_t rng_seed, int threads) {
  if (n_samples == 0) throw InputError("mc_fts_check needs n_samples > 0");
  if (!(dt > 0.0)) throw InputError("mc_fts_check needs dt > 0");
  if (sys.dim != dom.dim()) throw InputError("system/domain dimension mismatch");

  Mat x0s = sample_initial(dom, n_samples, rng_seed);
  std::vector<std::optional<std::pair<double, bool>>> exits(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      exits[i] = first_exit(sys, dom, x0s.col(static_cast<Eigen::Index>(i)), dt);
    }
  });

  OracleReport report;
  report.n_samples = n_samples;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!exits[i]) continue;
    ++report.violations;
    if (!report.counterexample) {
      report.counterexample = Counterexample{
          i, x0s.col(static_cast<Eigen::Index>(i)), exits[i]->first,
          exits[i]->second};
    }
  }
  report.passed = report.violations == 0;
  return report;
}

}  // namespace fts
