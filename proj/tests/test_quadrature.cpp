#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "klist/quadrature.hpp"

using klist::integrate_adaptive;
using klist::QuadratureError;

TEST_CASE("polynomials are exact to the Kronrod degree") {
    const auto cubic = integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0);
    REQUIRE(cubic.value == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    REQUIRE(cubic.segments == 1); // one K15 panel integrates x² exactly

    const auto poly = integrate_adaptive(
        [](double x) { return 5.0 * std::pow(x, 9) - 2.0 * x + 1.0; }, -1.0, 2.0);
    // ∫ = x^10/2 − x² + x over [−1, 2] = 512 − 4 + 2 − (1/2 − 1 − 1) = 511.5.
    REQUIRE(poly.value == Catch::Approx(511.5).epsilon(1e-13));
}

TEST_CASE("smooth transcendental integrals hit the requested tolerance") {
    const auto sine = integrate_adaptive([](double x) { return std::sin(x); }, 0.0,
                                         std::numbers::pi, 1e-12);
    REQUIRE(sine.value == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(sine.error_estimate <= 1e-12 * 2.0 * 1.0001);

    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const auto gauss = integrate_adaptive(
        [&](double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }, -8.0, 8.0, 1e-12);
    REQUIRE(gauss.value == Catch::Approx(std::erf(8.0 / std::numbers::sqrt2)).epsilon(1e-12));
}

TEST_CASE("adaptive refinement finds a narrow bump") {
    const double w = 1e-3;
    const auto bump = integrate_adaptive(
        [&](double x) { return std::exp(-(x / w) * (x / w)); }, -1.0, 1.0, 1e-9);
    // ∫ e^{−(x/w)²} dx = w√π up to a negligible truncation term.
    REQUIRE(bump.value == Catch::Approx(w * std::sqrt(std::numbers::pi)).epsilon(1e-9));
    REQUIRE(bump.segments > 4); // the first panel cannot resolve the bump
}

TEST_CASE("integrable endpoint singularity converges by bisection") {
    const auto res = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0,
                                        1.0, 1e-8);
    REQUIRE(res.value == Catch::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("invalid arguments and integrands are rejected") {
    const auto one = [](double) { return 1.0; };
    REQUIRE_THROWS_AS(integrate_adaptive(one, 1.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(integrate_adaptive(one, 0.0, 1.0, 0.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(integrate_adaptive(one, 0.0, 1.0, 1e-10, 0.0, 0),
                      std::invalid_argument);
    // 1/x is sampled at the panel midpoint x = 0 and must be caught.
    REQUIRE_THROWS_AS(integrate_adaptive([](double x) { return 1.0 / x; }, -1.0, 1.0),
                      QuadratureError);
    // A hard integrand with a starved segment budget reports the residual.
    REQUIRE_THROWS_WITH(
        integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-12,
                           0.0, 3),
        Catch::Matchers::ContainsSubstring("segments"));
}
