#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pinnrc/circuits.hpp"

using namespace pinnrc;

namespace {

// Independent closed forms, written out per fixture rather than through
// the library's component split.
double oracle_current(const CircuitCase& c, double t) {
  double i = c.r0() ? c.u_dc() / *c.r0() : 0.0;
  for (const auto& b : c.branches()) i += c.u_dc() / b.r * std::exp(-t / (b.r * b.c));
  return i;
}

std::vector<CircuitCase> fixtures() {
  return {CircuitCase::case0(), CircuitCase::case1(), CircuitCase::case2(), CircuitCase::case3()};
}

// Case 2/3 components: resistive + first branch together, then one per extra branch.
std::vector<double> oracle_components(const CircuitCase& c, double t) {
  const auto& br = c.branches();
  std::vector<double> out{c.u_dc() / *c.r0() + c.u_dc() / br[0].r * std::exp(-t / (br[0].r * br[0].c))};
  for (std::size_t k = 1; k < br.size(); ++k) out.push_back(c.u_dc() / br[k].r * std::exp(-t / (br[k].r * br[k].c)));
  return out;
}

}  // namespace

TEST_CASE("fixtures and validation") {
  CHECK(CircuitCase::case0().case_index() == 0);
  CHECK(CircuitCase::case3().case_index() == 3);
  CHECK(CircuitCase::case2().branches()[1].time_constant() == doctest::Approx(10.0));
  CHECK(CircuitCase::case3().branches()[2].time_constant() == doctest::Approx(100.0));
  CHECK_THROWS_AS(CircuitCase::make(1.0, std::nullopt, {}), std::invalid_argument);
  CHECK_THROWS_AS(CircuitCase::make(1.0, std::nullopt, {{-1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(CircuitCase::make(1.0, 0.0, {{1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(CircuitCase::make(1.0, std::nullopt, {{1.0, 1.0}, {2.0, 5.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(TimeDomain::make(0.0), std::invalid_argument);
  CHECK(component_count(CircuitCase::case1()) == 1);
  CHECK(component_count(CircuitCase::case3()) == 3);
}

TEST_CASE("analytical current examples") {
  CHECK(analytical_current(CircuitCase::case0(), 0.0) == 1.0);
  CHECK(analytical_current(CircuitCase::case0(), 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(analytical_current(CircuitCase::case1(), 0.0) == doctest::Approx(1.1));
  CHECK(analytical_log_current(CircuitCase::case0(), 3.0) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(analytical_log_current(CircuitCase::case1(), 0.0) == doctest::Approx(0.0953102).epsilon(1e-6));
  CHECK_THROWS_AS(analytical_current(CircuitCase::case0(), -1.0), std::domain_error);
}

TEST_CASE("initial current") {
  CHECK(initial_current(CircuitCase::case0()) == doctest::Approx(1.0));
  CHECK(initial_current(CircuitCase::case1()) == doctest::Approx(1.1));
  CHECK(initial_current(CircuitCase::case3()) == doctest::Approx(1.8));
  for (const auto& c : fixtures()) CHECK(initial_current(c) == doctest::Approx(analytical_current(c, 0.0)));
}

TEST_CASE("residual examples") {
  const auto c0 = CircuitCase::case0();
  const auto c1 = CircuitCase::case1();
  const auto c2 = CircuitCase::case2();
  CHECK(std::abs(residual_raw(c0, 1.0, std::exp(-1.0), -std::exp(-1.0))) < 1e-15);
  CHECK(residual_raw(c0, 4.2, 1.0, 0.0) == 1.0);
  CHECK(residual_raw(c1, 3.0, 0.1, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(residual_raw(c2, 0.0, 1.0, 0.0), std::invalid_argument);

  const std::vector<double> i{1.1, 0.5};
  const std::vector<double> di{-1.0, -0.05};
  const auto r = residual_raw_multi(c2, 0.0, i, di);
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r[0]) < 1e-15);
  CHECK(std::abs(r[1]) < 1e-15);
  const std::vector<double> i2{1.1, 1.0};
  const std::vector<double> di2{-1.0, 0.0};
  CHECK(residual_raw_multi(c2, 0.0, i2, di2)[1] == doctest::Approx(0.1));
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(residual_raw_multi(c2, 0.0, one, one), std::invalid_argument);

  CHECK(residual_log(c0, 17.0, 3.3, -1.0) == 0.0);
  CHECK(residual_log(CircuitCase::make(1.0, std::nullopt, {{2.0, 3.0}}), 0.0, 0.0, 0.0) ==
        doctest::Approx(1.0 / 6.0));
  CHECK(std::abs(residual_log(c1, 0.0, std::log(0.1), 0.0)) < 1e-15);
}

TEST_CASE("oracle annihilation on a dense grid") {
  for (const auto& c : fixtures()) {
    CAPTURE(c.label());
    for (int k = 0; k <= 1000; ++k) {
      const double t = 10.0 * k / 1000.0;
      const auto comp = analytical_components(c, t);
      const auto dcomp = analytical_component_derivatives(c, t);
      if (c.case_index() <= 1) {
        CHECK(std::abs(residual_raw(c, t, comp[0], dcomp[0])) < 1e-12);
        CHECK(std::abs(residual_log(c, t, std::log(comp[0]), dcomp[0] / comp[0])) < 1e-12);
      }
      std::vector<double> u(comp.size());
      std::vector<double> du(comp.size());
      for (std::size_t k2 = 0; k2 < comp.size(); ++k2) {
        u[k2] = std::log(comp[k2]);
        du[k2] = dcomp[k2] / comp[k2];
      }
      for (double r : residual_raw_multi(c, t, comp, dcomp)) CHECK(std::abs(r) < 1e-12);
      for (double r : residual_log_multi(c, t, u, du)) CHECK(std::abs(r) < 1e-12);
    }
  }
}

TEST_CASE("raw-log identity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  for (const auto& c : {CircuitCase::case0(), CircuitCase::case1()}) {
    for (int k = 0; k < 500; ++k) {
      const double t = std::abs(ud(rng));
      const double u = ud(rng);
      const double du = ud(rng);
      const double lhs = residual_log(c, t, u, du) * std::exp(u);
      const double rhs = residual_raw(c, t, std::exp(u), std::exp(u) * du);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max({std::abs(lhs), std::abs(rhs), 1e-300}) + 1e-300);
    }
  }
}

TEST_CASE("monotone decay, asymptote and sum consistency") {
  for (const auto& c : fixtures()) {
    CAPTURE(c.label());
    double prev = analytical_current(c, 0.0);
    for (int k = 1; k <= 600; ++k) {
      const double t = 0.05 * k;  // stays where e^{-t} is visible next to U/R0
      const double i = analytical_current(c, t);
      CHECK(i < prev);
      if (c.r0()) CHECK(i > c.u_dc() / *c.r0());
      prev = i;
      const double ref = oracle_current(c, t);
      CHECK(std::abs(i - ref) <= 1e-12 * ref);
      const auto comp = analytical_components(c, t);
      double sum = 0.0;
      for (double v : comp) sum += v;
      CHECK(std::abs(sum - i) <= 1e-12 * i);
      if (c.case_index() >= 2) {
        const auto want = oracle_components(c, t);
        for (std::size_t j = 0; j < want.size(); ++j) CHECK(comp[j] == doctest::Approx(want[j]).epsilon(1e-13));
      }
    }
  }
}
