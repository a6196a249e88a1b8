#include "dppfit/error.hpp"
#include "dppfit/optimize.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace dppfit;

TEST_SUITE("optimize") {
  TEST_CASE("interior maximum of a smooth function") {
    const ScalarMax m = maximize_scalar([](double x) { return -(x - 0.3137) * (x - 0.3137); }, 0.0, 1.0);
    CHECK(m.argmax == doctest::Approx(0.3137).epsilon(1e-7));
    CHECK_FALSE(m.boundary_hit);
    CHECK(m.bracket_upper - m.bracket_lower <= 1e-8);
  }

  TEST_CASE("multimodal function keeps the best grid basin") {
    auto f = [](double x) { return std::exp(-200 * (x - 0.2) * (x - 0.2)) + 2 * std::exp(-200 * (x - 0.8) * (x - 0.8)); };
    CHECK(maximize_scalar(f, 0.0, 1.0).argmax == doctest::Approx(0.8).epsilon(1e-6));
  }

  TEST_CASE("monotone function hits the boundary") {
    const ScalarMax m = maximize_scalar([](double x) { return x; }, 0.0, 1.0);
    CHECK(m.argmax == doctest::Approx(1.0));
    CHECK(m.boundary_hit);
  }

  TEST_CASE("collapsed interval returns its point") {
    const ScalarMax m = maximize_scalar([](double x) { return -x; }, 0.1, 0.1);
    CHECK(m.argmax == 0.1);
    CHECK(m.evaluations == 1);
  }

  TEST_CASE("NaN and -inf rank below finite values") {
    auto f = [](double x) {
      if (x < 0.5) return std::numeric_limits<double>::quiet_NaN();
      return -(x - 0.7) * (x - 0.7);
    };
    CHECK(maximize_scalar(f, 0.0, 1.0).argmax == doctest::Approx(0.7).epsilon(1e-7));
  }

  TEST_CASE("box maximization by coordinate sweeps") {
    auto f = [](std::span<const double> x) {
      return -(x[0] - 0.2) * (x[0] - 0.2) - 2 * (x[1] - 0.6) * (x[1] - 0.6) - 0.5 * (x[0] - 0.2) * (x[1] - 0.6);
    };
    const BoxMax m = maximize_in_box(f, ParamBox{{0.0, 0.0}, {1.0, 1.0}}, 16);
    CHECK(m.argmax[0] == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(m.argmax[1] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK_FALSE(m.boundary_hit);
  }

  TEST_CASE("box validation") {
    CHECK_THROWS_AS(ParamBox({{1.0}, {0.5}}).validate(), DomainError);
    CHECK_THROWS_AS(ParamBox({{0.0, 0.0}, {1.0}}).validate(), DomainError);
    CHECK(ParamBox{{0.0}, {1.0}}.contains(std::vector<double>{0.5}));
    CHECK_FALSE(ParamBox{{0.0}, {1.0}}.contains(std::vector<double>{1.5}));
  }
}
