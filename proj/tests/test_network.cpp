#include "fts/network.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace fts;
using fts::testing::random_net;
using fts::testing::rel_err;
using fts::testing::vec2;

namespace {

double fd_dt(const LyapunovNet& net, double t, const Vec& x, double h) {
  return (forward(net, t + h, x) - forward(net, t - h, x)) / (2.0 * h);
}

double fd_dx(const LyapunovNet& net, double t, const Vec& x, int i, double h) {
  Vec a = x, b = x;
  a(i) += h;
  b(i) -= h;
  return (forward(net, t, a) - forward(net, t, b)) / (2.0 * h);
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("parameter counts") {
  CHECK(init_net({3, 128, 1}, 7).param_count() == 641);
  CHECK(init_net({3, 32, 32, 32, 1}, 7).param_count() == 2273);
}

TEST_CASE("init is reproducible, Glorot-bounded, biases zero") {
  LyapunovNet a = init_net({3, 32, 32, 1}, 7);
  LyapunovNet b = init_net({3, 32, 32, 1}, 7);
  CHECK((a.params().array() == b.params().array()).all());
  for (int l = 0; l < a.n_layers(); ++l) {
    double lim = std::sqrt(6.0 / (a.layer_dims()[l] + a.layer_dims()[l + 1]));
    CHECK(a.weight(l).cwiseAbs().maxCoeff() <= lim);
    CHECK(a.bias(l).isZero(0.0));
  }
  CHECK_FALSE((init_net({3, 32, 32, 1}, 8).params().array() == a.params().array()).all());
}

TEST_CASE("invalid layer dims") {
  CHECK_THROWS_AS(validate_layer_dims({3, 1}), InputError);
  CHECK_THROWS_AS(validate_layer_dims({3, 8, 2}), InputError);
  CHECK_THROWS_AS(validate_layer_dims({1, 8, 1}), InputError);
  CHECK_NOTHROW(validate_layer_dims({2, 4, 1}));
}

TEST_CASE("all-zero parameters give V = 0 and zero gradient") {
  LyapunovNet net = init_net({3, 16, 1}, 1);
  net.params().setZero();
  CHECK(forward(net, 0.3, vec2(1.0, -2.0)) == 0.0);
  InputGradient g = input_gradient(net, 0.3, vec2(1.0, -2.0));
  CHECK(g.dv_dt == 0.0);
  CHECK(g.dv_dx.isZero(0.0));
}

TEST_CASE("single hidden unit gives softplus(0) = ln 2") {
  LyapunovNet net = init_net({3, 1, 1}, 1);
  net.params().setZero();
  net.weight(1)(0, 0) = 1.0;
  CHECK(forward(net, 0.9, vec2(4.0, 5.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(0.0) == doctest::Approx(0.693147).epsilon(1e-6));
}

TEST_CASE("softplus is stable at large pre-activations") {
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(softplus(-800.0)));
  LyapunovNet net = init_net({2, 1, 1}, 1);
  net.params().setZero();
  net.bias(0)(0) = 800.0;
  net.weight(1)(0, 0) = 1.0;
  Vec x = Vec::Zero(1);
  double v = forward(net, 0.0, x);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(800.0));
  CHECK(std::isfinite(input_gradient(net, 0.0, x).dv_dt));
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
}

TEST_CASE("input gradient matches central differences on 100 random triples") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int worst_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> dims = (trial % 2 == 0) ? std::vector<int>{3, 128, 1}
                                             : std::vector<int>{3, 32, 32, 32, 1};
    LyapunovNet net = init_net(dims, 1000 + trial);
    double t = u(rng);
    Vec x = vec2(u(rng), u(rng));
    InputGradient g = input_gradient(net, t, x);
    const double h = 1e-5;
    double scale = std::max({std::abs(g.dv_dt), g.dv_dx.cwiseAbs().maxCoeff(), 1e-3});
    if (std::abs(g.dv_dt - fd_dt(net, t, x, h)) / scale > 1e-6) ++worst_fail;
    for (int i = 0; i < 2; ++i) {
      if (std::abs(g.dv_dx(i) - fd_dx(net, t, x, i, h)) / scale > 1e-6) ++worst_fail;
    }
  }
  CHECK(worst_fail == 0);
}

TEST_CASE("affine path recovers its coefficients") {
  // One hidden unit pushed deep into the linear regime of softplus.
  LyapunovNet net = init_net({3, 1, 1}, 1);
  net.params().setZero();
  net.weight(0)(0, 0) = 0.5;   // t
  net.weight(0)(0, 1) = -1.0;  // x1
  net.weight(0)(0, 2) = 2.0;   // x2
  net.bias(0)(0) = 60.0;
  net.weight(1)(0, 0) = 1.0;
  InputGradient g = input_gradient(net, 0.2, vec2(0.1, 0.3));
  CHECK(g.dv_dt == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.dv_dx(0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(g.dv_dx(1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("orbital derivative under the zero field is dV/dt") {
  LyapunovNet net = random_net({3, 8, 8, 1}, 4);
  Vec x = vec2(0.4, -0.2);
  CHECK(orbital_derivative(net, make_zero_field(2), 0.3, x) ==
        doctest::Approx(input_gradient(net, 0.3, x).dv_dt).epsilon(1e-14));
}

TEST_CASE("time-independent net: orbital derivative is grad . f") {
  LyapunovNet net = random_net({3, 8, 1}, 4);
  net.weight(0).col(0).setZero();
  VectorField f = make_ex2_lakshmikantham(0.1);
  Vec x = vec2(0.4, -0.2);
  InputGradient g = input_gradient(net, 0.3, x);
  CHECK(g.dv_dt == 0.0);
  CHECK(orbital_derivative(net, f, 0.3, x) ==
        doctest::Approx(g.dv_dx.dot(eval_field(f, 0.3, x))).epsilon(1e-14));
}

TEST_CASE("orbital derivative matches a directional finite difference") {
  VectorField f = make_ex1_lti();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    LyapunovNet net = init_net({3, 32, 32, 1}, 50 + trial);
    double t = 0.5 * (u(rng) + 2.0) / 2.0;
    Vec x = vec2(u(rng), u(rng));
    Vec fx = eval_field(f, t, x);
    const double h = 1e-6;
    double fd = (forward(net, t + h, x + h * fx) - forward(net, t - h, x - h * fx)) / (2.0 * h);
    double vd = orbital_derivative(net, f, t, x);
    CHECK(rel_err(vd, fd, 1e-3) <= 1e-5);
  }
}

TEST_CASE("orbital derivative is linear in the field") {
  LyapunovNet net = random_net({3, 8, 8, 1}, 12);
  VectorField f = make_ex2_lakshmikantham(0.1);
  VectorField f2 = f;
  f2.eval = [f](double t, const Vec& x) { return Vec(2.0 * f.eval(t, x)); };
  Vec x = vec2(0.7, 0.1);
  double dt = input_gradient(net, 0.4, x).dv_dt;
  double a = orbital_derivative(net, f, 0.4, x) - dt;
  double b = orbital_derivative(net, f2, 0.4, x) - dt;
  CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
}

TEST_CASE("batch evaluation agrees with pointwise evaluation") {
  LyapunovNet net = random_net({3, 16, 16, 1}, 21);
  VectorField f = make_ex3_pendulum();
  Mat in(3, 40);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index j = 0; j < in.cols(); ++j) in.col(j) << u(rng) + 1.0, u(rng), u(rng);
  Eigen::RowVectorXd v = forward_batch(net, in);
  Eigen::RowVectorXd vd = orbital_derivative_batch(net, f, in);
  for (Eigen::Index j = 0; j < in.cols(); ++j) {
    Vec x = in.col(j).tail(2);
    CHECK(v(j) == doctest::Approx(forward(net, in(0, j), x)).epsilon(1e-13));
    CHECK(vd(j) == doctest::Approx(orbital_derivative(net, f, in(0, j), x)).epsilon(1e-11));
  }
}

TEST_CASE("values and gradients stay finite for extreme weights") {
  LyapunovNet net = random_net({3, 8, 8, 1}, 3, 200.0);
  Vec x = vec2(3.0, -3.0);
  CHECK(std::isfinite(forward(net, 1.0, x)));
  InputGradient g = input_gradient(net, 1.0, x);
  CHECK(std::isfinite(g.dv_dt));
  CHECK(g.dv_dx.allFinite());
}

TEST_CASE("backprop value path matches finite differences") {
  LyapunovNet net = random_net({3, 4, 3, 1}, 8);
  Mat in(3, 1);
  in << 0.3, 0.5, -0.4;
  ForwardTape tape = forward_tape(net, in);
  Eigen::RowVectorXd adj = Eigen::RowVectorXd::Ones(1);
  ParamGradient g = backprop(net, tape, adj);
  REQUIRE(g.flat.size() == net.params().size());
  for (Eigen::Index i = 0; i < net.params().size(); ++i) {
    LyapunovNet p = net, m = net;
    p.params()(i) += 1e-6;
    m.params()(i) -= 1e-6;
    double fd = (forward_batch(p, in)(0) - forward_batch(m, in)(0)) / 2e-6;
    CHECK(rel_err(g.flat(i), fd, 1e-4) <= 1e-6);
  }
}

}  // TEST_SUITE
