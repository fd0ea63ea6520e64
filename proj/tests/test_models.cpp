#include <doctest.h>

#include "qwkb/models.hpp"

using namespace qwkb;

namespace {

SymExpr P(const char* s) { return parse_symexpr(s); }

// replace X_gD0 by X_g1 X_g2 X_g3 X_g4
SymExpr reduce_d0(const SymExpr& e) { return e.substitute({{"X_gD0", P("X_g1*X_g2*X_g3*X_g4")}}); }

}  // namespace

TEST_CASE("every curated path reproduces its expected data") {
    for (const auto& name : builtin_names()) {
        ModelBundle b = builtin(name);
        CHECK(!b.paths.empty());
        for (const auto& [pname, p] : b.paths) {
            Mat2 m = compose_path(parse_word(p.word));
            INFO(name << "/" << pname << " -> " << to_string(m));
            CHECK(m.det() == SymExpr(1));
            CHECK(regularized_trace(m, p.mode) == p.expected_trace);
            if (p.expected_matrix) CHECK(m == *p.expected_matrix);
        }
    }
}

TEST_CASE("printed q-Airy word carries the opposite overall sign") {
    Mat2 printed = compose_path(parse_word("Sinv(-1,xi) * Toff(Y) * Sinv(0) * Toff(Y)"));
    Mat2 want = *builtin("qairy").paths.at("full_loop").expected_matrix;
    CHECK(printed.a == -want.a);
    CHECK(printed.c == -want.c);
    CHECK(printed.d == -want.d);
}

TEST_CASE("full conifold trace before regularization") {
    ModelBundle b = builtin("qhyper");
    SymExpr tr = compose_path(parse_word(b.paths.at("full_loop").word)).trace();
    CHECK(tr == P("XA^2*XB^2*xi1^(-1)*xi2 - XA^2*xi2 - XA^2*xi1^(-1) + XA^2*XB^(-2) + XB^2 + XB^(-2)"));
}

TEST_CASE("F0 charge map") {
    ModelBundle b = builtin("qmathieu");
    const NamedPath& p = b.paths.at("full_loop");
    SymExpr tr = anchor_rewrite(path_trace(b, "full_loop"));
    // forward: the four-charge expression expands back to the trace
    CHECK(p.expected_charges->substitute(b.charge_dictionary) == tr);
    // backward: the lattice solve lands on the same element modulo X_gD0 = X_g1 X_g2 X_g3 X_g4
    SymExpr mapped = charge_map(tr, b.charge_dictionary, {"X_g1", "X_g2", "X_g3", "X_g4", "X_gD0"});
    CHECK(mapped == reduce_d0(*p.expected_charges));
    // product relation
    CHECK(P("X_g1*X_g2*X_g3*X_g4").substitute(b.charge_dictionary) ==
          P("X_gD0").substitute(b.charge_dictionary));
}

TEST_CASE("charge map errors and identity") {
    std::map<std::string, SymExpr> id{{"Ya", P("Ya")}, {"Yb", P("Yb")}};
    SymExpr e = P("Ya^2*Yb^(-1) + 3*Yb");
    CHECK(charge_map(e, id).substitute(id) == e);
    CHECK_THROWS_AS(charge_map(P("Yc"), id), IncompleteAssignment);
    CHECK_THROWS_AS(charge_map(P("xi*Ya"), id), UnrepresentableTerm);
    std::map<std::string, SymExpr> sq{{"X_a", P("Ya^2*Yb^2")}};
    CHECK_THROWS_AS(charge_map(P("Ya"), sq), UnrepresentableTerm);
}

TEST_CASE("conifold half monodromy in charge variables") {
    ModelBundle b = builtin("qhyper");
    SymExpr half = path_trace(b, "half_loop");
    CHECK(half == P("XA*XB^(-1)"));
    // X_g1 X_g2 = XB^4 XA^-4, so XA/XB is its -1/4 power
    CHECK(charge_map(half, b.charge_dictionary) == P("X_g1^(-1/4)*X_g2^(-1/4)"));
    CHECK(*b.paths.at("half_loop").expected_charges == P("X_g1^(-1/4)*X_g2^(-1/4)"));
}

TEST_CASE("builtin parameters") {
    CHECK_THROWS_AS(builtin("qairy_kappa", {{"kappa", QI(1)}}), DegenerateModuli);
    CHECK_THROWS_AS(builtin("qairy_kappa", {{"kappa", QI(-1)}}), DegenerateModuli);
    CHECK_THROWS_AS(builtin("qairy", {{"kappa", QI(1)}}), ConfigError);
    CHECK_THROWS_AS(builtin("nope"), ConfigError);
    ModelBundle k = resolve_model("qairy_kappa:kappa=1/3");
    CHECK(k.model.parameters.at("kappa") == QI(Rat(1, 3)));
    ModelBundle m = builtin("qmathieu");
    CHECK(m.model.parameters.at("kappa") == QI(Rat(0), Rat(3, 100)));
    CHECK(m.model.parameters.at("tau") == QI(Rat(97, 100)));
}

TEST_CASE("model files") {
    const char* good = R"({"name": "toy", "cover_degree": 1, "parameters": {"kappa": "0.03i"},
        "T": [[0, [[1, "1", 0], [0, "1/2", 0]]], [1, [[1, -1, 0]]]],
        "log_cut_pairs": [{"puncture": "infinity", "branch_point": [-1.5, 0]}]})";
    QdeModel m = parse_model_json(good);
    CHECK(m.T.size() == 2);
    CHECK(m.T0().coeff(0) == QI(Rat(1, 2)));
    CHECK(m.T[1].coeff(1) == QI(-1));
    CHECK(m.parameters.at("kappa") == QI(Rat(0), Rat(3, 100)));
    CHECK_THROWS_AS(parse_model_json(R"({"T": [[0, [[1, 1, 0]]]], "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_model_json(R"({"T": [[0, [[0, 1, 0]]]]})"), ConfigError);
    CHECK_THROWS_AS(parse_model_json("{"), ConfigError);
    CHECK_THROWS_AS(parse_model_json(R"({"T": [[0, [[1, 1, 0]]]], "cover_degree": 3})"), ConfigError);
}
