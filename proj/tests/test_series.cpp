#include <doctest.h>

#include "qwkb/models.hpp"
#include "qwkb/series.hpp"

using namespace qwkb;

namespace {

template <class K>
cplx at(const SeriesRing<K>& ring, const RExpr<K>& a, cplx x) {
    auto [w, r] = ring_point(ring, x);
    return ring.eval(a, w, r);
}

// central difference in log x
template <class K>
cplx fd_dlog(const SeriesRing<K>& ring, const RExpr<K>& a, cplx x, double h = 1e-5) {
    return (at(ring, a, x * std::exp(h)) - at(ring, a, x * std::exp(-h))) / (2 * h);
}

}  // namespace

TEST_CASE("R0 of the two sheets multiply to one") {
    for (const auto& name : builtin_names()) {
        QdeModel m = builtin(name).model;
        SeriesRing<QI> ring(m);
        auto p = riccati_coeffs(ring, m, 1, 0), q = riccati_coeffs(ring, m, -1, 0);
        RExpr<QI> prod = ring.mul(p.coeffs[0], q.coeffs[0]);
        CHECK(prod.B.is_zero());
        CHECK(prod.A == ring.constant(QI(1)).A);
    }
}

TEST_CASE("log derivative agrees with finite differences") {
    for (const auto& name : builtin_names()) {
        QdeModel m = builtin(name).model;
        SeriesRing<QI> ring(m);
        auto s = riccati_coeffs(ring, m, 1, 2);
        const cplx x(0.7, 1.9);
        for (const auto& c : s.coeffs) {
            cplx exact = at(ring, ring.dlog(c), x), fd = fd_dlog(ring, c, x);
            CHECK(std::abs(exact - fd) < 1e-6 * (1 + std::abs(exact)));
        }
    }
}

TEST_CASE("q-Airy first correction") {
    QdeModel m = builtin("qairy").model;
    SeriesRing<QI> ring(m);
    for (int sign : {1, -1}) {
        auto s = riccati_coeffs(ring, m, sign, 1);
        for (cplx x : {cplx(2, 0), cplx(0.3, 1.2), cplx(-3, 0.5)}) {
            cplx r = std::sqrt(x * x - 1.0), D = x * x - 1.0;
            cplx ratio = at(ring, s.coeffs[1], x) / at(ring, s.coeffs[0], x);
            // R1/R0 = sign x/(2r) - x^2/(2D) on the sheet R0 = x + sign r
            cplx want = double(sign) * x / (2.0 * r) - x * x / (2.0 * D);
            CHECK(std::abs(ratio - want) < 1e-12);
        }
        auto D = log_r_coeffs(ring, s);
        auto S = s_coeffs(ring, s, D, 1);
        CHECK(std::abs(at(ring, S[0], cplx(2, 0)) - (-2.0 / 3.0)) < 1e-13);
    }
}

TEST_CASE("Hessenberg and direct logarithm agree exactly") {
    for (const auto& name : {"qairy", "qairy_kappa", "qramanujan"}) {
        QdeModel m = builtin(name).model;
        SeriesRing<QI> ring(m);
        auto s = riccati_coeffs(ring, m, 1, 5);
        auto a = log_r_coeffs(ring, s), b = log_r_coeffs_direct(ring, s);
        REQUIRE(a.size() == b.size());
        for (size_t n = 0; n < a.size(); ++n) {
            RExpr<QI> d = ring.sub(a[n], b[n]);
            CHECK(d.is_zero());
        }
    }
}

TEST_CASE("truncated series solves the q-Riccati equation") {
    for (const auto& name : builtin_names()) {
        QdeModel m = builtin(name).model;
        SeriesRing<QI> ring(m);
        int N = m.cover_degree == 2 ? 3 : 5;
        for (int sign : {1, -1}) {
            auto s = riccati_coeffs(ring, m, sign, N);
            VerifyReport rep = verify_riccati(ring, s, {cplx(1.7, 0.4), cplx(-0.6, 2.3), cplx(3.1, -1.2)});
            CHECK(rep.symbolic_zero);
            CHECK(rep.max_residual < 1e-10);
        }
    }
}

TEST_CASE("floating ring agrees with the exact ring") {
    QdeModel m = builtin("qmathieu").model;
    SeriesRing<QI> e(m);
    SeriesRing<cplx> f(m);
    auto se = riccati_coeffs(e, m, 1, 3);
    auto sf = riccati_coeffs(f, m, 1, 3);
    for (int n = 0; n <= 3; ++n) {
        cplx x(1.3, 0.9);
        cplx a = at(e, se.coeffs[n], x), b = at(f, sf.coeffs[n], x);
        CHECK(std::abs(a - b) < 1e-9 * (1 + std::abs(a)));
    }
    VerifyReport rep = verify_riccati(f, sf, {cplx(1.3, 0.9)}, false);
    CHECK(rep.max_residual < 1e-8);
}

TEST_CASE("parallel and serial verification match") {
    QdeModel m = builtin("qairy_kappa").model;
    SeriesRing<QI> ring(m);
    auto s = riccati_coeffs(ring, m, -1, 4);
    std::vector<cplx> pts;
    for (int k = 0; k < 16; ++k) pts.push_back(std::polar(2.5, 0.37 * k + 0.1));
    auto a = verify_riccati(ring, s, pts, true), b = verify_riccati(ring, s, pts, false);
    CHECK(a.per_point == b.per_point);
}

TEST_CASE("sample points at branch points are rejected") {
    QdeModel m = builtin("qairy").model;
    SeriesRing<QI> ring(m);
    auto s = riccati_coeffs(ring, m, 1, 1);
    CHECK_THROWS_AS(verify_riccati(ring, s, {cplx(1, 0)}), std::invalid_argument);
}
