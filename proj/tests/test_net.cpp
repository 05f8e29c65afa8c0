#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

#include "pinnrc/checkpoint.hpp"
#include "pinnrc/net.hpp"

using namespace pinnrc;

namespace {

Mlp random_net(std::vector<int> sizes, std::uint64_t seed) {
  Mlp net = Mlp::init(sizes, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> b(-0.5, 0.5);
  for (std::size_t l = 0; l < net.layer_count(); ++l)
    for (auto& v : net.bias(l)) v = b(rng);
  return net;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("init shapes and determinism") {
  const auto sizes = default_layer_sizes();
  CHECK(sizes == std::vector<int>{1, 40, 40, 40, 1});
  const Mlp a = Mlp::init(sizes, 42);
  const Mlp b = Mlp::init(sizes, 42);
  CHECK(a.layer_count() == 4);
  CHECK(a.size() == std::size_t(40 + 40 + 1600 + 40 + 1600 + 40 + 40 + 1));
  CHECK(checkpoint_bytes(a) == checkpoint_bytes(b));
  CHECK(checkpoint_bytes(a) != checkpoint_bytes(Mlp::init(sizes, 43)));
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    CHECK(a.bias(l).isZero());
    const double bound = std::sqrt(6.0 / (a.layer_sizes()[l] + a.layer_sizes()[l + 1]));
    CHECK(a.weight(l).cwiseAbs().maxCoeff() <= bound);
  }
  CHECK_THROWS_AS(Mlp::init({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Mlp::init({1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Mlp::init({2, 4, 1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Mlp::init({1, 0, 1}, 1), std::invalid_argument);
}

TEST_CASE("forward on constant nets") {
  Mlp z = Mlp::zeros({1, 5, 5, 1});
  CHECK(forward(z, 0.3)(0) == 0.0);
  z.bias(2)(0) = 0.7;
  for (double s : {-1.0, 0.0, 0.9}) {
    CHECK(forward(z, s)(0) == 0.7);
    const auto ev = forward_tangent(z, s);
    CHECK(ev.u(0, 0) == 0.7);
    CHECK(ev.du(0, 0) == 0.0);
  }
  const Mlp n = random_net({1, 6, 2}, 3);
  CHECK(forward(n, 0.25) == forward(n, 0.25));
}

TEST_CASE("tanh unit has unit slope at zero") {
  Mlp n = Mlp::zeros({1, 1, 1});
  n.weight(0)(0, 0) = 1.0;
  n.weight(1)(0, 0) = 1.0;
  const auto ev = forward_tangent(n, 0.0);
  CHECK(ev.du(0, 0) == 1.0);
  CHECK(forward_tangent(n, 0.5).u(0, 0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("tangent against central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> in(-1.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Mlp n = random_net({1, 8, 8, 1}, rng());
    const double t = in(rng);
    const double fd = (forward(n, t + h)(0) - forward(n, t - h)(0)) / (2 * h);
    worst = std::max(worst, rel(forward_tangent(n, t).du(0, 0), fd));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("batched tangent equals pointwise") {
  const Mlp n = random_net({1, 7, 3}, 9);
  const std::vector<double> xs{-1.0, -0.2, 0.4, 1.0};
  const auto ev = forward_tangent(n, xs);
  CHECK(ev.batch() == 4);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto one = forward_tangent(n, xs[j]);
    CHECK((ev.u.col(j) - one.u.col(0)).norm() < 1e-15);
    CHECK((ev.du.col(j) - one.du.col(0)).norm() < 1e-15);
    CHECK((forward(n, xs[j]) - one.u.col(0)).norm() < 1e-15);
  }
}

TEST_CASE("backward") {
  const Mlp n = random_net({1, 8, 8, 1}, 17);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xs(16);
  for (auto& x : xs) x = u(rng);
  const auto ev = forward_tangent(n, xs);
  Eigen::MatrixXd su(1, 16), sd(1, 16), su2(1, 16), sd2(1, 16);
  for (int j = 0; j < 16; ++j) {
    su(0, j) = u(rng);
    sd(0, j) = u(rng);
    su2(0, j) = u(rng);
    sd2(0, j) = u(rng);
  }

  SUBCASE("zero seeds give zero gradients") {
    const auto g = backward(n, ev, Eigen::MatrixXd::Zero(1, 16), Eigen::MatrixXd::Zero(1, 16));
    CHECK(g.values().isZero());
    CHECK(g.same_shape(n));
  }
  SUBCASE("linear in the seeds") {
    GradientSet sum = backward(n, ev, su, sd);
    sum += backward(n, ev, su2, sd2);
    const auto joint = backward(n, ev, su + su2, sd + sd2);
    CHECK((sum.values() - joint.values()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("matches central differences over every parameter") {
    const auto g = backward(n, ev, su, sd);
    auto objective = [&](const Mlp& m) {
      const auto e = forward_tangent(m, xs);
      return (su.array() * e.u.array()).sum() + (sd.array() * e.du.array()).sum();
    };
    const double h = 1e-6;
    double worst = 0.0;
    Mlp p = n;
    for (Eigen::Index i = 0; i < p.values().size(); ++i) {
      const double v = p.values()(i);
      p.values()(i) = v + h;
      const double up = objective(p);
      p.values()(i) = v - h;
      const double down = objective(p);
      p.values()(i) = v;
      worst = std::max(worst, rel(g.values()(i), (up - down) / (2 * h)));
    }
    CHECK(worst < 1e-5);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(backward(n, ev, Eigen::MatrixXd::Zero(2, 16), Eigen::MatrixXd::Zero(1, 16)),
                    std::invalid_argument);
    CHECK_THROWS_AS(backward(n, ev, Eigen::MatrixXd::Zero(1, 15), Eigen::MatrixXd::Zero(1, 15)),
                    std::invalid_argument);
  }
}

TEST_CASE("gradient set arithmetic") {
  GradientSet a({1, 3, 1});
  a.values().setConstant(2.0);
  GradientSet b({1, 3, 1});
  b.values().setConstant(0.5);
  a += b;
  a *= 2.0;
  CHECK(a.values().isConstant(5.0));
  CHECK_THROWS(a += GradientSet({1, 4, 1}));
}
