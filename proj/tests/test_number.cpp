#include <doctest.h>

#include "qwkb/number.hpp"

using namespace qwkb;

TEST_CASE("decimal literals parse to exact rationals") {
    CHECK(parse_rat("0.97") == Rat(97, 100));
    CHECK(parse_rat("-3/100") == Rat(-3, 100));
    CHECK(parse_rat("1e-4") == Rat(1, 10000));
    CHECK(parse_rat("2.5E2") == Rat(250));
    CHECK_THROWS_AS(parse_rat("1/0"), ParseError);
    CHECK_THROWS_AS(parse_rat("abc"), ParseError);
}

TEST_CASE("complex literals") {
    CHECK(parse_qi("0.03i") == QI(Rat(0), Rat(3, 100)));
    CHECK(parse_qi("1/2-3/4*i") == QI(Rat(1, 2), Rat(-3, 4)));
    CHECK(parse_qi("-i") == QI(Rat(0), Rat(-1)));
    CHECK(parse_qi("1e-2+1e-3i") == QI(Rat(1, 100), Rat(1, 1000)));
    CHECK(parse_qi("5") == QI(5));
}

TEST_CASE("printing round-trips") {
    for (const char* s : {"3", "-1/2", "3/100*i", "1/2-3/4*i", "i", "-i"}) CHECK(to_string(parse_qi(s)) == s);
}

TEST_CASE("field operations") {
    QI a(Rat(1, 2), Rat(3)), b(Rat(-2), Rat(1, 5));
    CHECK((a * b) / b == a);
    CHECK(QI::i() * QI::i() == QI(-1));
    CHECK(pow(QI::i(), 4) == QI(1));
    CHECK(pow(a, -2) * pow(a, 2) == QI(1));
    CHECK_THROWS_AS(a / QI(0), std::domain_error);
}

TEST_CASE("doubles convert through their shortest decimal form") {
    CHECK(rat_from_double(0.97) == Rat(97, 100));
    CHECK(rat_from_double(-0.25) == Rat(-1, 4));
}
