#include "fts/domains.hpp"

#include <cmath>
#include <numbers>

namespace fts {

namespace {

constexpr double kMinAcceptance = 1e-3;
constexpr std::size_t kAcceptanceWarmup = 1000;

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Tracks a rejection sampler's acceptance rate and aborts degenerate domains.
class AcceptanceGuard {
 public:
  void record(bool accepted) {
    ++attempts_;
    if (accepted) ++accepted_;
    if (attempts_ >= kAcceptanceWarmup &&
        static_cast<double>(accepted_) <
            kMinAcceptance * static_cast<double>(attempts_)) {
      throw DomainError("rejection sampler acceptance rate below 1e-3 (" +
                        std::to_string(accepted_) + "/" +
                        std::to_string(attempts_) + "): degenerate domain");
    }
  }

 private:
  std::size_t attempts_ = 0;
  std::size_t accepted_ = 0;
};

Vec uniform_in_box(const std::pair<Vec, Vec>& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(box.first.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x(i) = box.first(i) + (box.second(i) - box.first(i)) * u(rng);
  }
  return x;
}

std::pair<Vec, Vec> ellipsoid_box(const Mat& shape) {
  Eigen::LLT<Mat> llt(shape);
  if (llt.info() != Eigen::Success) {
    throw DomainError("ellipsoid matrix is not positive definite");
  }
  Vec half = llt.solve(Mat::Identity(shape.rows(), shape.cols()))
                 .diagonal()
                 .cwiseSqrt();
  return {-half, half};
}

}  // namespace

EllipsoidFamily::EllipsoidFamily(int n, std::function<Mat(double)> gamma,
                                 std::string label)
    : n_(n), gamma_(std::move(gamma)), label_(std::move(label)) {
  if (n_ <= 0) throw InputError("ellipsoid family dimension must be positive");
}

Mat EllipsoidFamily::gamma(double t) const {
  Mat g = symmetrize(gamma_(t));
  if (g.rows() != n_ || g.cols() != n_) {
    throw DomainError("Gamma(t) has wrong shape for family '" + label_ + "'");
  }
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw DomainError("Gamma(" + std::to_string(t) +
                      ") is not positive definite for family '" + label_ + "'");
  }
  return g;
}

double EllipsoidFamily::level(double t, const Vec& x) const {
  return x.dot(gamma(t) * x);
}

Mat EllipsoidFamily::boundary_sample(double t, std::size_t m,
                                     std::mt19937_64& rng) const {
  Mat g = gamma(t);
  Mat pts = inverse_sqrt_spd(g) * sphere_directions(n_, m, rng);
  // Pull every point back onto the level set to remove rounding drift.
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    double q = pts.col(j).dot(g * pts.col(j));
    pts.col(j) /= std::sqrt(q);
  }
  return pts;
}

std::pair<Vec, Vec> EllipsoidFamily::bounding_box(double t) const {
  return ellipsoid_box(gamma(t));
}

std::shared_ptr<const EllipsoidFamily> make_constant_family(const Mat& gamma) {
  Mat g = symmetrize(gamma);
  return std::make_shared<EllipsoidFamily>(
      static_cast<int>(g.rows()), [g](double) { return g; }, "constant");
}

std::shared_ptr<const EllipsoidFamily> make_ex2_scalar_mu_family(
    int n, double scale, double k, double r0, double t0) {
  return std::make_shared<EllipsoidFamily>(
      n,
      [=](double t) {
        double mu = r0 * r0 + (1.0 / k - r0 * r0) * std::exp(2.0 * (t - t0));
        return Mat(scale * k * mu * Mat::Identity(n, n));
      },
      "ex2_scalar_mu");
}

std::shared_ptr<const EllipsoidFamily> make_ex3_rotating_diag_family(
    const Vec& diag0, const Vec& rates, double omega) {
  if (diag0.size() != 2 || rates.size() != 2) {
    throw InputError("ex3_rotating_diag is defined for planar states only");
  }
  return std::make_shared<EllipsoidFamily>(
      2,
      [=](double t) {
        double c = std::cos(omega * t);
        double s = std::sin(omega * t);
        Mat theta(2, 2);
        theta << c, s, -s, c;
        Vec d(2);
        d << diag0(0) * std::exp(rates(0) * t), diag0(1) * std::exp(rates(1) * t);
        return Mat(theta * d.asDiagonal() * theta.transpose());
      },
      "ex3_rotating_diag");
}

bool contains(const DomainSpec& dom, double t, const Vec& x, Membership which) {
  if (x.size() != dom.dim()) {
    throw InputError("state dimension mismatch in contains()");
  }
  switch (which) {
    case Membership::initial:
      return dom.initial.level(x) <= 1.0;
    case Membership::trajectory:
    case Membership::trajectory_closure: {
      if (!(t >= dom.t0 && t <= dom.t_end())) {
        throw InputError("time " + std::to_string(t) + " outside J = [" +
                         std::to_string(dom.t0) + ", " +
                         std::to_string(dom.t_end()) + "]");
      }
      double q = dom.trajectory->level(t, x);
      return which == Membership::trajectory ? q < 1.0 : q <= 1.0;
    }
  }
  return false;
}

WellPosedness wellposed_check(const DomainSpec& dom) {
  if (auto ell = std::dynamic_pointer_cast<const EllipsoidFamily>(dom.trajectory)) {
    Mat diff = symmetrize(dom.initial.r_matrix - ell->gamma(dom.t0));
    double margin = Eigen::SelfAdjointEigenSolver<Mat>(diff).eigenvalues()(0);
    return {margin > 0.0, margin};
  }
  Mat ring = initial_ring(dom.initial, 256);
  double margin = 1.0;
  for (Eigen::Index j = 0; j < ring.cols(); ++j) {
    margin = std::min(margin, 1.0 - dom.trajectory->level(dom.t0, ring.col(j)));
  }
  return {margin > 0.0, margin};
}

Mat sphere_directions(int n, std::size_t m, std::mt19937_64& rng) {
  Mat u(n, static_cast<Eigen::Index>(m));
  if (n == 1) {
    for (std::size_t j = 0; j < m; ++j) u(0, j) = (j % 2 == 0) ? 1.0 : -1.0;
    return u;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    double norm = 0.0;
    do {
      for (int i = 0; i < n; ++i) u(i, j) = normal(rng);
      norm = u.col(j).norm();
    } while (norm < 1e-12);
    u.col(j) /= norm;
  }
  return u;
}

Mat inverse_sqrt_spd(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw DomainError("matrix is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Mat sample_interior(const DomainSpec& dom, std::size_t n_c,
                    std::uint64_t rng_seed) {
  if (n_c == 0) throw InputError("sample_interior needs n_c > 0");
  const int n = dom.dim();
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AcceptanceGuard guard;
  Mat out(n + 1, static_cast<Eigen::Index>(n_c));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    double t = dom.t0 + dom.horizon * u(rng);
    auto box = dom.trajectory->bounding_box(t);
    while (true) {
      Vec x = uniform_in_box(box, rng);
      bool ok = dom.trajectory->in_closure(t, x);
      guard.record(ok);
      if (ok) {
        out(0, j) = t;
        out.col(j).tail(n) = x;
        break;
      }
    }
  }
  return out;
}

Mat sample_boundary(const DomainSpec& dom, std::size_t n_t,
                    std::size_t n_b_per_t, std::uint64_t rng_seed) {
  if (n_t < 2) throw InputError("sample_boundary needs n_t >= 2");
  if (n_b_per_t == 0) throw InputError("sample_boundary needs n_b_per_t > 0");
  const int n = dom.dim();
  std::mt19937_64 rng(rng_seed);
  Mat out(n + 1, static_cast<Eigen::Index>(n_t * n_b_per_t));
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < n_t; ++i) {
    double t = (i + 1 == n_t)
                   ? dom.t_end()
                   : dom.t0 + dom.horizon * static_cast<double>(i) /
                                  static_cast<double>(n_t - 1);
    Mat pts = dom.trajectory->boundary_sample(t, n_b_per_t, rng);
    for (Eigen::Index j = 0; j < pts.cols(); ++j, ++col) {
      out(0, col) = t;
      out.col(col).tail(n) = pts.col(j);
    }
  }
  return out;
}

std::size_t initial_ring_size(int n, std::size_t n_0) {
  std::size_t want = std::max<std::size_t>(2 * static_cast<std::size_t>(n), n_0 / 10);
  return std::min(n_0, want);
}

Mat initial_ring(const InitialSet& init, std::size_t count) {
  const int n = init.dim();
  Mat dirs(n, static_cast<Eigen::Index>(count));
  if (n == 2) {
    for (std::size_t j = 0; j < count; ++j) {
      double a = 2.0 * std::numbers::pi * static_cast<double>(j) /
                 static_cast<double>(count);
      dirs(0, j) = std::cos(a);
      dirs(1, j) = std::sin(a);
    }
  } else {
    // Axis points first, then a fixed pseudo-random fill.
    std::mt19937_64 rng(0x5eedf00dULL);
    Mat extra = sphere_directions(n, count, rng);
    for (std::size_t j = 0; j < count; ++j) {
      if (j < 2 * static_cast<std::size_t>(n)) {
        dirs.col(j).setZero();
        dirs(j / 2, j) = (j % 2 == 0) ? 1.0 : -1.0;
      } else {
        dirs.col(j) = extra.col(j);
      }
    }
  }
  Mat pts = inverse_sqrt_spd(init.r_matrix) * dirs;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    pts.col(j) /= std::sqrt(init.level(pts.col(j)));
  }
  return pts;
}

Mat sample_initial(const DomainSpec& dom, std::size_t n_0,
                   std::uint64_t rng_seed) {
  if (n_0 == 0) throw InputError("sample_initial needs n_0 > 0");
  const int n = dom.dim();
  std::size_t ring = initial_ring_size(n, n_0);
  Mat out(n, static_cast<Eigen::Index>(n_0));
  out.leftCols(static_cast<Eigen::Index>(ring)) = initial_ring(dom.initial, ring);
  // A ring point can land a hair outside after rounding; pull it inside.
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(ring); ++j) {
    while (dom.initial.level(out.col(j)) > 1.0) out.col(j) *= 1.0 - 1e-16;
  }
  std::mt19937_64 rng(rng_seed);
  auto box = ellipsoid_box(dom.initial.r_matrix);
  AcceptanceGuard guard;
  for (Eigen::Index j = static_cast<Eigen::Index>(ring); j < out.cols(); ++j) {
    while (true) {
      Vec x = uniform_in_box(box, rng);
      bool ok = dom.initial.level(x) <= 1.0;
      guard.record(ok);
      if (ok) {
        out.col(j) = x;
        break;
      }
    }
  }
  return out;
}

}  // namespace fts
