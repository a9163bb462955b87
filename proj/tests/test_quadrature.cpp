#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "occusim/quadrature.hpp"

using occusim::quad::adaptive_gauss_kronrod;
using occusim::quad::composite_simpson;

TEST_CASE("composite Simpson is exact for cubics") {
    auto cubic = [](double x) { return x * x * x - 2.0 * x * x + 3.0 * x - 5.0; };
    // Antiderivative x^4/4 - 2x^3/3 + 3x^2/2 - 5x evaluated over [0, 2].
    const double exact = 4.0 - 16.0 / 3.0 + 6.0 - 10.0;
    CHECK(composite_simpson(cubic, 0.0, 2.0, 2) == doctest::Approx(exact).epsilon(1e-15));
    CHECK(composite_simpson(cubic, 0.0, 2.0, 64) == doctest::Approx(exact).epsilon(1e-15));
}

TEST_CASE("composite Simpson converges at fourth order on sin") {
    auto f = [](double x) { return std::sin(x); };
    const double pi = std::acos(-1.0);
    const double e16 = std::abs(composite_simpson(f, 0.0, pi, 16) - 2.0);
    const double e32 = std::abs(composite_simpson(f, 0.0, pi, 32) - 2.0);
    CHECK(e16 / e32 > 12.0); // ~16 for a fourth-order rule
    CHECK(e16 / e32 < 20.0);
    // theoretical bound: pi * (pi/256)^4 / 180 ~ 4e-10
    CHECK(std::abs(composite_simpson(f, 0.0, pi, 256) - 2.0) < 4e-10);
}

TEST_CASE("composite Simpson rounds odd panel counts up") {
    auto f = [](double x) { return x * x * x * x; };
    CHECK(composite_simpson(f, 0.0, 1.0, 3) == composite_simpson(f, 0.0, 1.0, 4));
    CHECK(composite_simpson(f, 0.0, 1.0, 1) == composite_simpson(f, 0.0, 1.0, 2));
}

TEST_CASE("composite Simpson edge cases and input validation") {
    auto f = [](double x) { return x; };
    CHECK(composite_simpson(f, 1.5, 1.5, 8) == 0.0);
    CHECK_THROWS_AS(composite_simpson(f, 1.0, 0.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(composite_simpson(f, 0.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("adaptive Gauss-Kronrod matches closed forms") {
    const double pi = std::acos(-1.0);
    auto gauss = [](double x) { return std::exp(-x * x); };
    const double erf_part = 0.5 * std::sqrt(pi) * std::erf(10.0);
    CHECK(adaptive_gauss_kronrod(gauss, 0.0, 10.0, 1e-13) ==
          doctest::Approx(erf_part).epsilon(1e-12));

    // Sharp peak at the origin; adaptivity must refine near zero.
    const double eps = 1e-2;
    auto peak = [eps](double x) { return 1.0 / (eps * eps + x * x); };
    const double exact = (2.0 / eps) * std::atan(1.0 / eps);
    CHECK(adaptive_gauss_kronrod(peak, -1.0, 1.0, 1e-10) ==
          doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("adaptive Gauss-Kronrod input validation") {
    auto f = [](double x) { return x; };
    CHECK(adaptive_gauss_kronrod(f, 2.0, 2.0, 1e-8) == 0.0);
    CHECK_THROWS_AS(adaptive_gauss_kronrod(f, 1.0, 0.0, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(adaptive_gauss_kronrod(f, 0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(adaptive_gauss_kronrod(f, 0.0, 1.0, -1e-8), std::invalid_argument);
}
