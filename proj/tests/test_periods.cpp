#include <doctest.h>

#include <numbers>

#include "qwkb/models.hpp"
#include "qwkb/periods.hpp"

using namespace qwkb;

namespace {

constexpr double pi = std::numbers::pi;
const cplx I(0, 1);

// roots of tau x^2 + (2s - kappa) x + tau = 0, ordered by modulus
std::pair<cplx, cplx> mathieu_roots(cplx kappa, double tau, int s) {
    cplx b = 2.0 * s - kappa, d = std::sqrt(b * b - 4 * tau * tau);
    cplx r1 = (-b - d) / (2 * tau), r2 = (-b + d) / (2 * tau);
    if (std::abs(r1) > std::abs(r2)) std::swap(r1, r2);
    return {r1, r2};
}

}  // namespace

TEST_CASE("q-Airy residue at the origin") {
    QdeModel m = builtin("qairy").model;
    auto loop = ContourSpec::loop(0, 0.5);
    for (long n : {-1L, 0L, 1L}) {
        CHECK(std::abs(contour_period(m, loop, 1, n) - (-pi * pi - 4 * pi * pi * n)) < 1e-8);
        CHECK(std::abs(contour_period(m, loop, -1, n) - (pi * pi - 4 * pi * pi * n)) < 1e-8);
    }
}

TEST_CASE("q-Airy_kappa residue at kappa = 1/2") {
    QdeModel m = builtin("qairy_kappa", {{"kappa", QI(Rat(1, 2))}}).model;
    auto loop = ContourSpec::loop(0, 0.25);
    CHECK(std::abs(contour_period(m, loop, 1, 0) - (-2 * pi * pi / 3)) < 1e-8);
    CHECK(std::abs(contour_period(m, loop, -1, 0) - (2 * pi * pi / 3)) < 1e-8);
}

TEST_CASE("loop periods: start point, winding and log index") {
    QdeModel m = builtin("qairy_kappa", {{"kappa", QI(Rat(1, 3))}}).model;
    cplx base = contour_period(m, ContourSpec::loop(0, 0.3), 1, 0);
    for (double a : {0.7, 2.0, -2.5}) CHECK(std::abs(contour_period(m, ContourSpec::loop(0, 0.3, 1, a), 1, 0) - base) < 1e-9);
    CHECK(std::abs(contour_period(m, ContourSpec::loop(0, 0.3, 2), 1, 0) - 2.0 * base) < 1e-9);
    for (long n : {-2L, 1L, 3L})
        for (int wnd : {1, -1, 2}) {
            auto loop = ContourSpec::loop(0, 0.3, wnd);
            cplx d = contour_period(m, loop, 1, n) - contour_period(m, loop, 1, 0);
            CHECK(std::abs(d - 2.0 * pi * I * double(n) * 2.0 * pi * I * double(wnd)) < 1e-10);
        }
    // flavour cycle: both sheets together
    CHECK(std::abs(contour_period(m, ContourSpec::loop(0, 0.3), 1, 0) + contour_period(m, ContourSpec::loop(0, 0.3), -1, 0)) < 1e-8);
}

TEST_CASE("loops too close to singular points are rejected") {
    QdeModel m = builtin("qairy").model;
    CHECK_THROWS_AS(contour_period(m, ContourSpec::loop(0, 1.0), 1, 0), ContourClearance);
    CHECK_THROWS_AS(contour_period(m, ContourSpec::loop(0.5, 0.5), 1, 0), ContourClearance);
}

TEST_CASE("higher periods do not depend on the loop radius") {
    QdeModel m = builtin("qairy").model;
    auto a = period_series(m, ContourSpec::loop(0, 0.4), 1, 3), b = period_series(m, ContourSpec::loop(0, 0.7), 1, 3);
    REQUIRE(a.size() == 4);
    for (size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-8 * (1 + std::abs(a[k])));
}

TEST_CASE("Voros exponents") {
    QdeModel m = builtin("qairy").model;
    CHECK(std::abs(voros_leading(m, ContourSpec::segment({1.0, 1.0}), 1).exponent) == 0.0);
    // the cycle leaving x = 1, circling the origin and returning to x = 1 closes and is real
    auto loop = voros_leading(m, ContourSpec::segment({1.0, 0.5 * I, -0.5, -0.5 * I, 1.0}), 1);
    CHECK(loop.closes);
    CHECK(std::abs(loop.exponent - (-2 * pi * pi)) < 1e-8);
    // the direct path between the two branch points does not close on the same log branch
    auto direct = voros_leading(m, ContourSpec::segment({-1.0, I, 1.0}), 1);
    CHECK(!direct.closes);
    CHECK(std::abs(direct.exponent.imag()) > 1.0);
}

TEST_CASE("local F0: the four basis lifts add up to the D0 period") {
    const cplx kappa(0, 0.03);
    const double tau = 0.97;
    QdeModel m = builtin("qmathieu").model;
    auto [x2, x1] = mathieu_roots(kappa, tau, 1);
    auto [x4, x3] = mathieu_roots(kappa, tau, -1);
    auto g1 = voros_leading(m, ContourSpec::segment({x2, I, 1.0, -I, x1}), 1);
    auto g2 = voros_leading(m, ContourSpec::segment({x2, x1}), 1);
    auto g3 = voros_leading(m, ContourSpec::segment({x3, I, -1.0, -I, x4}), 1);
    auto g4 = voros_leading(m, ContourSpec::segment({x3, x4}), 1);
    for (const auto* g : {&g1, &g2, &g3, &g4}) CHECK(g->closes);
    // sheets are principal at each path's middle vertex; gamma_3 and gamma_4 both run from x3 to x4 here
    cplx sum = g1.exponent + g2.exponent - g3.exponent - g4.exponent;
    CHECK(std::abs(sum - (-4 * pi * pi)) < 1e-8);
}
