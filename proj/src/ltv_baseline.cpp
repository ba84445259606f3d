#include "fts/ltv_baseline.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fts {

namespace {

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

void require_symmetric(const Mat& m, const char* what) {
  if (m.rows() != m.cols()) throw InputError(std::string(what) + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError(std::string(what) + " is not symmetric");
  }
}

void require_square(const Mat& m, int n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw InputError(std::string(what) + " has shape " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                     std::to_string(n));
  }
}

// Eigenvalues of L^{-1} B L^{-T} with A = L L'; ascending.
Vec generalized_eigenvalues(const Mat& b, const Mat& a) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(symmetrize(b), symmetrize(a),
                                                   Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw InputError("P is not positive definite");
  return es.eigenvalues();
}

Mat sample_closure_at(const DomainSpec& dom, double t, std::size_t m, std::uint64_t seed) {
  const int n = dom.dim();
  auto [lo, hi] = dom.trajectory->bounding_box(t);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat out(n, static_cast<Eigen::Index>(m));
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  Vec x(n);
  while (accepted < m) {
    for (int i = 0; i < n; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * u(rng);
    ++attempts;
    if (dom.trajectory->in_closure(t, x)) out.col(static_cast<Eigen::Index>(accepted++)) = x;
    if (attempts >= 1000 && static_cast<double>(accepted) < 1e-3 * static_cast<double>(attempts)) {
      throw DomainError("rejection sampling acceptance below 1e-3");
    }
  }
  return out;
}

}  // namespace

QuadraticForm QuadraticForm::constant(const Mat& p) {
  if (p.rows() != p.cols()) throw InputError("P must be square");
  QuadraticForm q;
  q.kind_ = Kind::constant;
  q.n_ = static_cast<int>(p.rows());
  q.fixed_ = symmetrize(p);
  return q;
}

QuadraticForm QuadraticForm::function(int n, MatrixFn p, double h) {
  if (!p) throw InputError("P(t) function is empty");
  if (!(h > 0.0)) throw InputError("finite-difference step must be positive");
  QuadraticForm q;
  q.kind_ = Kind::function;
  q.n_ = n;
  q.fn_ = std::move(p);
  q.h_ = h;
  return q;
}

QuadraticForm QuadraticForm::slices(std::vector<double> times, std::vector<Mat> mats) {
  if (times.empty() || times.size() != mats.size()) {
    throw InputError("slice times and matrices must be non-empty and of equal length");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InputError("slice times must be increasing");
  }
  QuadraticForm q;
  q.kind_ = Kind::slices;
  q.n_ = static_cast<int>(mats.front().rows());
  for (auto& m : mats) {
    require_square(m, q.n_, "slice matrix");
    m = symmetrize(m);
  }
  q.times_ = std::move(times);
  q.mats_ = std::move(mats);
  return q;
}

Mat QuadraticForm::p(double t) const {
  switch (kind_) {
    case Kind::constant:
      return fixed_;
    case Kind::function: {
      Mat m = fn_(t);
      require_square(m, n_, "P(t)");
      return symmetrize(m);
    }
    case Kind::slices: {
      if (times_.size() == 1 || t <= times_.front()) return mats_.front();
      if (t >= times_.back()) return mats_.back();
      auto it = std::upper_bound(times_.begin(), times_.end(), t);
      auto i = static_cast<std::size_t>(it - times_.begin()) - 1;
      double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
      return (1.0 - w) * mats_[i] + w * mats_[i + 1];
    }
  }
  return fixed_;
}

Mat QuadraticForm::p_dot(double t) const {
  switch (kind_) {
    case Kind::constant:
      return Mat::Zero(n_, n_);
    case Kind::function:
      return (p(t + h_) - p(t - h_)) / (2.0 * h_);
    case Kind::slices: {
      const std::size_t k = times_.size();
      if (k == 1) return Mat::Zero(n_, n_);
      auto slope = [&](std::size_t i) {
        return ((mats_[i + 1] - mats_[i]) / (times_[i + 1] - times_[i])).eval();
      };
      if (t <= times_.front()) return slope(0);
      if (t >= times_.back()) return slope(k - 2);
      auto it = std::lower_bound(times_.begin(), times_.end(), t);
      auto i = static_cast<std::size_t>(it - times_.begin());
      // On a knot: central difference across its neighbours.
      if (times_[i] == t) return (mats_[i + 1] - mats_[i - 1]) / (times_[i + 1] - times_[i - 1]);
      return slope(i - 1);
    }
  }
  return Mat::Zero(n_, n_);
}

namespace {

// Least squares of `target` (V - V(0)) against the monomials x_a x_b, a <= b.
QuadraticFit fit_monomials(const Mat& states, const Vec& target) {
  const Eigen::Index n = states.rows();
  const Eigen::Index terms = n * (n + 1) / 2;
  if (states.cols() < terms + 1) {
    throw InputError("quadratic fit needs at least " + std::to_string(terms + 1) + " points");
  }
  Mat design(states.cols(), terms);
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    Eigen::Index c = 0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) design(j, c++) = states(a, j) * states(b, j);
    }
  }
  Eigen::ColPivHouseholderQR<Mat> qr(design);
  if (qr.rank() < terms) throw FitError("quadratic fit design matrix is rank deficient");
  Vec coef = qr.solve(target);

  Mat p(n, n);
  Eigen::Index c = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b, ++c) {
      if (a == b) {
        p(a, a) = coef(c);
      } else {
        p(a, b) = p(b, a) = 0.5 * coef(c);
      }
    }
  }
  Vec resid = design * coef - target;
  return {QuadraticForm::constant(p),
          std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()))};
}

}  // namespace

QuadraticFit quadratic_fit(const LyapunovNet& net, const Mat& states, double t) {
  const int n = net.state_dim();
  if (states.rows() != n) throw InputError("fit states have the wrong dimension");
  Mat inputs(n + 1, states.cols());
  inputs.row(0).setConstant(t);
  inputs.bottomRows(n) = states;
  const double v_origin = forward(net, t, Vec::Zero(n));
  Vec target = (forward_batch(net, inputs).array() - v_origin).matrix().transpose();
  return fit_monomials(states, target);
}

QuadraticFit quadratic_fit(const std::function<double(const Vec&)>& v, const Mat& states) {
  if (states.rows() < 1) throw InputError("fit states are empty");
  const double v_origin = v(Vec::Zero(states.rows()));
  Vec target(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) target(j) = v(states.col(j)) - v_origin;
  return fit_monomials(states, target);
}

QuadraticFit quadratic_fit_on_domain(const LyapunovNet& net, const DomainSpec& dom, double t,
                                     std::size_t m, std::uint64_t rng_seed) {
  if (t < dom.t0 || t > dom.t_end()) throw InputError("fit time outside the horizon");
  return quadratic_fit(net, sample_closure_at(dom, t, m, rng_seed), t);
}

QuadraticForm quadratic_fit_slices(const LyapunovNet& net, const DomainSpec& dom,
                                   const std::vector<double>& times, std::size_t m,
                                   std::uint64_t rng_seed) {
  std::vector<Mat> mats;
  for (std::size_t i = 0; i < times.size(); ++i) {
    mats.push_back(quadratic_fit_on_domain(net, dom, times[i], m, derive_seed(rng_seed, i))
                       .form.p(times[i]));
  }
  return QuadraticForm::slices(times, std::move(mats));
}

Vec sym_eigenvalues(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

DlmiReport check_dlmi(const QuadraticForm& p, const MatrixFn& a, const MatrixFn& gamma,
                      const Mat& r, const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("DLMI grid is empty");
  if (!a || !gamma) throw InputError("A(t) and Gamma(t) are required");
  const int n = p.dim();
  require_square(r, n, "R");
  require_symmetric(r, "R");

  DlmiReport rep;
  rep.derivative_ok = true;
  rep.gap_ok = true;
  for (double t : grid) {
    Mat at = a(t);
    require_square(at, n, "A(t)");
    Mat gt = gamma(t);
    require_square(gt, n, "Gamma(t)");
    require_symmetric(gt, "Gamma(t)");
    Mat pt = p.p(t);
    DlmiSample s;
    s.t = t;
    // d/dt x'Px along dx/dt = A x.
    s.max_eig_derivative = sym_eigenvalues(p.p_dot(t) + at.transpose() * pt + pt * at).maxCoeff();
    s.min_eig_gap = sym_eigenvalues(pt - gt).minCoeff();
    rep.derivative_ok = rep.derivative_ok && s.max_eig_derivative < 0.0;
    rep.gap_ok = rep.gap_ok && s.min_eig_gap > 0.0;
    rep.samples.push_back(s);
  }
  rep.max_eig_initial = sym_eigenvalues(p.p(grid.front()) - r).maxCoeff();
  rep.initial_ok = rep.max_eig_initial < 0.0;
  rep.passed = rep.derivative_ok && rep.gap_ok && rep.initial_ok;
  return rep;
}

std::string dlmi_report_json(const DlmiReport& report) {
  using nlohmann::json;
  json samples = json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"t", s.t},
                       {"max_eig_pdot_plus_lyapunov", s.max_eig_derivative},
                       {"min_eig_p_minus_gamma", s.min_eig_gap}});
  }
  json doc = {{"samples", samples},
              {"max_eig_p0_minus_r", report.max_eig_initial},
              {"derivative_condition", report.derivative_ok},
              {"gap_condition", report.gap_ok},
              {"initial_condition", report.initial_ok},
              {"passed", report.passed}};
  return doc.dump(2) + "\n";
}

LyapunovNet scale_lyapunov(const LyapunovNet& net, double beta) {
  if (!(beta > 0.0)) throw InputError("scale factor must be positive");
  LyapunovNet out = net;
  const int last = out.n_layers() - 1;
  out.weight(last) *= beta;
  out.bias(last) *= beta;
  return out;
}

QuadraticForm scale_lyapunov(const QuadraticForm& form, double beta) {
  if (!(beta > 0.0)) throw InputError("scale factor must be positive");
  if (form.is_constant()) return QuadraticForm::constant(beta * form.p(0.0));
  QuadraticForm base = form;
  return QuadraticForm::function(
      form.dim(), [base, beta](double t) { return (beta * base.p(t)).eval(); });
}

ScaleInterval scale_interval(const QuadraticForm& p, const MatrixFn& gamma, const Mat& r,
                             const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("scale grid is empty");
  ScaleInterval si;
  si.lower = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    if (Eigen::LLT<Mat>(p.p(t)).info() != Eigen::Success) {
      throw InputError("P(" + format_double(t) + ") is not positive definite");
    }
    si.lower = std::max(si.lower, generalized_eigenvalues(gamma(t), p.p(t)).maxCoeff());
  }
  si.upper = generalized_eigenvalues(r, p.p(grid.front())).minCoeff();
  return si;
}

TransitionQ state_transition_q(const MatrixFn& a, const Mat& r,
                               const std::vector<double>& times, double dt) {
  if (times.empty()) throw InputError("Q grid is empty");
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  require_symmetric(r, "R");
  const auto n = r.rows();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InputError("Q grid must be increasing");
  }

  auto rhs = [&](double t, const Mat& phi) -> Mat {
    Mat at = a(t);
    require_square(at, static_cast<int>(n), "A(t)");
    return at * phi;
  };
  auto advance = [&](double t, Mat phi, double t_next) {
    while (t < t_next) {
      double h = std::min(dt, t_next - t);
      if (t_next - (t + h) < 1e-12 * std::max(1.0, std::abs(t_next))) h = t_next - t;
      Mat k1 = rhs(t, phi);
      Mat k2 = rhs(t + 0.5 * h, phi + 0.5 * h * k1);
      Mat k3 = rhs(t + 0.5 * h, phi + 0.5 * h * k2);
      Mat k4 = rhs(t + h, phi + h * k3);
      phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    return phi;
  };

  TransitionQ out;
  Mat phi = Mat::Identity(n, n);  // phi(t, t0)
  double t = times.front();
  for (double tk : times) {
    phi = advance(t, phi, tk);
    t = tk;
    Eigen::JacobiSVD<Mat> svd(phi);
    const Vec& sv = svd.singularValues();
    double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                          : std::numeric_limits<double>::infinity();
    out.max_condition = std::max(out.max_condition, cond);
    if (cond > 1e12) {
      out.warnings.push_back("transition matrix ill-conditioned at t = " + format_double(tk) +
                             " (condition " + format_double(cond) + ")");
    }
    Mat back = phi.inverse();  // phi(t0, t)
    Mat q = back.transpose() * r * back;
    out.times.push_back(tk);
    out.q.push_back(symmetrize(q));
  }
  return out;
}

QuadraticForm certificate_from_q(const TransitionQ& q, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0, 1)");
  std::vector<Mat> mats;
  for (const auto& m : q.q) mats.push_back((1.0 - eps) * m);
  return QuadraticForm::slices(q.times, std::move(mats));
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 >= t0)) throw InputError("invalid grid bounds");
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil((t1 - t0) / dt - 1e-9)));
  std::vector<double> g;
  for (std::size_t i = 0; i < steps; ++i) g.push_back(t0 + dt * static_cast<double>(i));
  g.push_back(t1);
  return g;
}

}  // namespace fts
