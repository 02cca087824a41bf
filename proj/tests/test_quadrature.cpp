#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ddfilt/error.hpp"
#include "ddfilt/quadrature.hpp"

using namespace ddfilt;

TEST_CASE("smooth integrals") {
    const std::vector<double> bp{0.0, std::numbers::pi};
    const auto r = integrate_adaptive([](double x) { return std::sin(x); }, bp);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(r.error < 1e-9);

    const std::vector<double> unit{0.0, 1.0};
    const auto e = integrate_adaptive([](double x) { return std::exp(x); }, unit);
    CHECK(e.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("oscillatory integrand with seeded panels") {
    // int_0^50 cos^2(40 x) dx = 25 + sin(4000)/160
    const double rate = 80.0;
    const auto bp = oscillation_breakpoints(0.0, 50.0, rate);
    CHECK(bp.front() == 0.0);
    CHECK(bp.back() == 50.0);
    const auto r = integrate_adaptive(
        [](double x) { return std::cos(40.0 * x) * std::cos(40.0 * x); }, bp);
    CHECK(r.value == doctest::Approx(25.0 + std::sin(4000.0) / 160.0).epsilon(1e-12));
}

TEST_CASE("kinks are honored as breakpoints") {
    const auto bp = merge_breakpoints({0.0, 1.0, 2.0}, std::vector<double>{0.3, 1.0, 5.0});
    CHECK(bp == std::vector<double>{0.0, 0.3, 1.0, 2.0});
    const auto r = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, bp);
    CHECK(r.value == doctest::Approx(0.045 + 0.5 * 1.7 * 1.7).epsilon(1e-14));
}

TEST_CASE("panel ceiling surfaces as a numerical error") {
    QuadratureOptions o;
    o.max_panels = 8;
    o.rel_tol = 1e-15;
    const std::vector<double> bp{0.0, 1.0};
    CHECK_THROWS_AS(integrate_adaptive([](double x) { return std::sin(1e4 * x * x); }, bp, o),
                    NumericalError);
}
