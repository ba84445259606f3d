#include "fts/domains.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fts;
using fts::testing::vec2;

namespace {

bool same_bits(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

TEST_SUITE("domains") {

TEST_CASE("ex1 membership on the trajectory boundary") {
  DomainSpec d = fts::testing::ex1_domain();
  Vec x = vec2(2.0, 0.0);
  CHECK_FALSE(contains(d, 0.5, x, Membership::trajectory));
  CHECK(contains(d, 0.5, x, Membership::trajectory_closure));
}

TEST_CASE("origin belongs to every set") {
  for (const DomainSpec& d : {fts::testing::ex1_domain(), fts::testing::ex2_domain(),
                              fts::testing::ex3_domain()}) {
    Vec o = Vec::Zero(2);
    for (double t : {d.t0, d.t0 + 0.5 * d.horizon, d.t_end()}) {
      CHECK(contains(d, t, o, Membership::initial));
      CHECK(contains(d, t, o, Membership::trajectory));
      CHECK(contains(d, t, o, Membership::trajectory_closure));
    }
  }
}

TEST_CASE("ex2 at t0") {
  DomainSpec d = fts::testing::ex2_domain();
  Vec x = vec2(1.0, 0.0);
  CHECK(contains(d, 0.0, x, Membership::trajectory));
  CHECK(contains(d, 0.0, x, Membership::initial));
  auto fam = std::dynamic_pointer_cast<const EllipsoidFamily>(d.trajectory);
  REQUIRE(fam);
  CHECK(fam->gamma(0.0)(0, 0) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("time outside J is rejected") {
  DomainSpec d = fts::testing::ex1_domain();
  Vec o = Vec::Zero(2);
  CHECK_THROWS_AS(contains(d, -0.1, o, Membership::trajectory), InputError);
  CHECK_THROWS_AS(contains(d, 1.5, o, Membership::trajectory_closure), InputError);
}

TEST_CASE("well-posedness margins") {
  WellPosedness w1 = wellposed_check(fts::testing::ex1_domain());
  CHECK(w1.ok);
  CHECK(w1.margin == doctest::Approx(0.05).epsilon(1e-12));

  DomainSpec eq = fts::testing::ex1_domain();
  eq.trajectory = make_constant_family(0.3 * Mat::Identity(2, 2));
  WellPosedness w0 = wellposed_check(eq);
  CHECK_FALSE(w0.ok);
  CHECK(std::abs(w0.margin) < 1e-15);

  WellPosedness w3 = wellposed_check(fts::testing::ex3_domain());
  CHECK(w3.ok);
  CHECK(w3.margin == doctest::Approx(2.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-12));
  CHECK(w3.margin == doctest::Approx(0.2026).epsilon(1e-3));

  CHECK(wellposed_check(fts::testing::ex2_domain()).ok);
}

TEST_CASE("non positive-definite gamma is a domain error") {
  auto fam = make_constant_family(-Mat::Identity(2, 2));
  CHECK_THROWS_AS(fam->gamma(0.0), DomainError);
}

TEST_CASE("interior samples lie in the closure (ex1)") {
  DomainSpec d = fts::testing::ex1_domain();
  Mat pts = sample_interior(d, 5000, 3);
  REQUIRE(pts.cols() == 5000);
  REQUIRE(pts.rows() == 3);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    double t = pts(0, j);
    CHECK(t >= d.t0);
    CHECK(t <= d.t_end());
    Vec x = pts.col(j).tail(2);
    CHECK(0.25 * x.squaredNorm() <= 1.0);
  }
}

TEST_CASE("interior samples lie in the closure (ex2, 55000 points)") {
  DomainSpec d = fts::testing::ex2_domain();
  Mat pts = sample_interior(d, 55000, 17);
  REQUIRE(pts.cols() == 55000);
  std::size_t bad = 0;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    double t = pts(0, j);
    double g = 0.08 * (1.0 + 9.0 * std::exp(2.0 * t));
    if (g * pts.col(j).tail(2).squaredNorm() > 1.0 + 1e-12) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("samplers are seed-reproducible") {
  DomainSpec d = fts::testing::ex3_domain();
  CHECK(same_bits(sample_interior(d, 1, 42), sample_interior(d, 1, 42)));
  CHECK(same_bits(sample_initial(d, 1, 42), sample_initial(d, 1, 42)));
  CHECK(same_bits(sample_boundary(d, 3, 4, 42), sample_boundary(d, 3, 4, 42)));
  CHECK_FALSE(same_bits(sample_interior(d, 8, 42), sample_interior(d, 8, 43)));
}

TEST_CASE("boundary samples satisfy the quadratic identity (ex1)") {
  DomainSpec d = fts::testing::ex1_domain();
  Mat pts = sample_boundary(d, 11, 500, 5);
  REQUIRE(pts.cols() == 5500);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    CHECK(std::abs(pts.col(j).tail(2).norm() - 2.0) <= 1e-12);
  }
  // Inclusive endpoints, equal spacing.
  CHECK(pts(0, 0) == 0.0);
  CHECK(pts(0, 5499) == 1.0);
  CHECK(pts(0, 500) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("boundary identity holds on time-varying families") {
  for (const DomainSpec& d : {fts::testing::ex2_domain(), fts::testing::ex3_domain()}) {
    Mat pts = sample_boundary(d, 7, 50, 8);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      double lv = d.trajectory->level(pts(0, j), pts.col(j).tail(2));
      CHECK(std::abs(lv - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("scalar boundary holds both points") {
  DomainSpec d = fts::testing::negative_domain();
  Mat pts = sample_boundary(d, 2, 2, 1);
  bool plus = false, minus = false;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    if (std::abs(pts(1, j) - 1.2) < 1e-12) plus = true;
    if (std::abs(pts(1, j) + 1.2) < 1e-12) minus = true;
  }
  CHECK(plus);
  CHECK(minus);
}

TEST_CASE("ex3 semi-axes at t = 2") {
  DomainSpec d = fts::testing::ex3_domain();
  auto fam = std::dynamic_pointer_cast<const EllipsoidFamily>(d.trajectory);
  REQUIRE(fam);
  Eigen::SelfAdjointEigenSolver<Mat> es(fam->gamma(2.0));
  Vec axes = es.eigenvalues().cwiseInverse().cwiseSqrt();
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double e = std::exp(1.0);
  double a1 = std::sqrt(pi2 / (2.0 * e));
  double a2 = std::sqrt(10.0 * pi2 / std::pow(e, 4));
  CHECK(a1 == doctest::Approx(1.3474).epsilon(1e-4));
  CHECK(a2 == doctest::Approx(1.3447).epsilon(1e-4));
  CHECK(axes.maxCoeff() == doctest::Approx(a1).epsilon(1e-12));
  CHECK(axes.minCoeff() == doctest::Approx(a2).epsilon(1e-12));

  // Boundary points never reach beyond the long semi-axis or inside the short one.
  Mat pts = sample_boundary(d, 2, 200, 4);
  for (Eigen::Index j = 200; j < 400; ++j) {
    double r = pts.col(j).tail(2).norm();
    CHECK(r <= a1 + 1e-12);
    CHECK(r >= a2 - 1e-12);
  }
}

TEST_CASE("initial samples (ex1)") {
  DomainSpec d = fts::testing::ex1_domain();
  Mat pts = sample_initial(d, 200, 6);
  REQUIRE(pts.cols() == 200);
  REQUIRE(pts.rows() == 2);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) CHECK(0.3 * pts.col(j).squaredNorm() <= 1.0 + 1e-12);
}

TEST_CASE("initial samples include the boundary ring (ex2)") {
  DomainSpec d = fts::testing::ex2_domain();
  Mat pts = sample_initial(d, 700, 6);
  double mx = pts.colwise().norm().maxCoeff();
  CHECK(mx > 0.99);
  CHECK(mx <= 1.0 + 1e-12);
  std::size_t ring = initial_ring_size(2, 700);
  REQUIRE(ring >= 1);
  Mat ref = initial_ring(d.initial, ring);
  CHECK((pts.leftCols(static_cast<Eigen::Index>(ring)) - ref).cwiseAbs().maxCoeff() <= 1e-14);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) CHECK(d.initial.level(pts.col(j)) <= 1.0);
}

TEST_CASE("sphere directions have unit norm; 1-D alternates sign") {
  std::mt19937_64 rng(1);
  Mat u = sphere_directions(3, 100, rng);
  for (Eigen::Index j = 0; j < u.cols(); ++j) CHECK(std::abs(u.col(j).norm() - 1.0) < 1e-14);
  Mat s = sphere_directions(1, 4, rng);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == -1.0);
}

TEST_CASE("inverse_sqrt_spd") {
  Mat m(2, 2);
  m << 4.0, 1.0, 1.0, 3.0;
  Mat s = inverse_sqrt_spd(m);
  CHECK((s * m * s - Mat::Identity(2, 2)).norm() < 1e-13);
  CHECK((s - s.transpose()).norm() < 1e-15);
}

TEST_CASE("bounding box encloses the closure") {
  DomainSpec d = fts::testing::ex3_domain();
  for (double t : {0.0, 0.7, 2.0}) {
    auto [lo, hi] = d.trajectory->bounding_box(t);
    std::mt19937_64 rng(2);
    Mat b = d.trajectory->boundary_sample(t, 400, rng);
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      CHECK((b.col(j).array() >= lo.array() - 1e-12).all());
      CHECK((b.col(j).array() <= hi.array() + 1e-12).all());
    }
  }
}

}  // TEST_SUITE
