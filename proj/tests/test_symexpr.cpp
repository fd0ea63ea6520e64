#include <doctest.h>

#include <random>

#include "qwkb/symexpr.hpp"

using namespace qwkb;

namespace {

// Random sums over a small symbol pool with exponents in [-3, 3] and half-integers.
struct ExprGen {
    std::mt19937 rng;
    explicit ExprGen(unsigned seed) : rng(seed) {}
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    SymExpr term() {
        static const char* pool[] = {"Y", "Y1", "xi", "xi2", "Xa", "X_g1"};
        QI c(Rat(uniform(-5, 5)), Rat(uniform(-3, 3), uniform(1, 4)));
        if (c.is_zero()) c = QI(1);
        SymExpr t(c);
        int n = uniform(0, 3);
        for (int k = 0; k < n; ++k) {
            Rat e(uniform(-6, 6), uniform(1, 2));
            t *= SymExpr::sym(pool[uniform(0, 5)], e);
        }
        return t;
    }
    SymExpr expr() {
        SymExpr e;
        int n = uniform(0, 4);
        for (int k = 0; k < n; ++k) e += term();
        return e;
    }
};

}  // namespace

TEST_CASE("symbol kinds follow the naming rule") {
    CHECK(symbol_kind("xi1") == SymbolKind::shift);
    CHECK(symbol_kind("Y21") == SymbolKind::voros);
    CHECK(symbol_kind("X_g1") == SymbolKind::charge);
    CHECK(symbol_kind("Xa") == SymbolKind::soliton);
    CHECK(symbol_kind("c_xi1") == SymbolKind::constant);
    CHECK(shift_anchor("xi2") == "2");
}

TEST_CASE("canonical form prunes zeros and merges terms") {
    SymExpr y = SymExpr::sym("Y");
    CHECK((y - y).is_zero());
    CHECK((y + y) == SymExpr(QI(2)) * y);
    CHECK((y * y.inverse()) == SymExpr(1));
    CHECK(SymExpr::sym("Y", Rat(1, 2)).pow(2) == y);
}

TEST_CASE("x-weight sums shift exponents") {
    Monomial m = Monomial::of("xi1", Rat(-1)) * Monomial::of("xi2", Rat(1)) * Monomial::of("Y", Rat(3));
    CHECK(sgn(m.x_weight()) == 0);
    CHECK(m.has_shift());
    CHECK_FALSE(Monomial::of("Y").has_shift());
}

TEST_CASE("printing and parsing round-trip") {
    ExprGen g(7);
    for (int k = 0; k < 300; ++k) {
        SymExpr e = g.expr();
        CHECK(parse_symexpr(to_string(e)) == e);
    }
    CHECK(to_string(parse_symexpr("-Y^2 - Y^(-2)")) == "-Y^(-2) - Y^2");
}

TEST_CASE("ring laws on random triples") {
    ExprGen g(11);
    for (int k = 0; k < 200; ++k) {
        SymExpr a = g.expr(), b = g.expr(), c = g.expr();
        CHECK(a * b == b * a);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(a + SymExpr() == a);
        SymExpr once = parse_symexpr(to_string(a));
        CHECK(parse_symexpr(to_string(once)) == once);
    }
}

TEST_CASE("evaluation agrees with numeric arithmetic") {
    ExprGen g(3);
    std::map<std::string, cplx> v{{"Y", {1.3, 0.2}}, {"Y1", {0.7, -0.4}}, {"xi", {0.9, 0.5}},
                                  {"xi2", {-1.1, 0.3}}, {"Xa", {2.0, 0.1}}, {"X_g1", {0.4, 0.8}}};
    for (int k = 0; k < 100; ++k) {
        SymExpr a = g.expr(), b = g.expr();
        cplx lhs = (a * b).evaluate(v), rhs = a.evaluate(v) * b.evaluate(v);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * (1 + std::abs(rhs)));
    }
}

TEST_CASE("substitution") {
    SymExpr e = parse_symexpr("xi1^(-1)*xi2*Y + 3");
    SymExpr r = e.substitute({{"xi1", parse_symexpr("c1*xi")}, {"xi2", parse_symexpr("c2*xi")}});
    CHECK(r == parse_symexpr("c1^(-1)*c2*Y + 3"));
    CHECK_THROWS_AS(SymExpr::sym("a", Rat(1, 2)).substitute({{"a", parse_symexpr("b + 1")}}), std::domain_error);
}

TEST_CASE("matrix inverse and determinant") {
    Mat2 m{SymExpr::sym("Y"), SymExpr::i(), SymExpr(0), SymExpr::sym("Y", Rat(-1))};
    CHECK(m.det() == SymExpr(1));
    CHECK(m * m.inverse() == Mat2::identity());
}
