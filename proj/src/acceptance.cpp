#include "qwkb/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qwkb/models.hpp"
#include "qwkb/network.hpp"
#include "qwkb/periods.hpp"
#include "qwkb/series.hpp"
#include "qwkb/stokesalg.hpp"

namespace qwkb {

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string expected;
    std::string got;
};

struct Oracle {
    int criterion;
    std::string name;
    std::vector<std::string> models;
    std::function<Outcome()> run;
};

struct Criterion {
    int id;
    const char* title;
    double budget;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> c = {
        {1, "symbolic q-Airy monodromy", 1.0},
        {2, "symbolic q-Airy_kappa trace", 0},
        {3, "symbolic conifold traces", 0},
        {4, "symbolic q-Mathieu trace and charges", 0},
        {5, "Stokes matrix identities", 1.0},
        {6, "FG cross-ratios", 0},
        {7, "Riccati self-verification through hbar^8", 30.0},
        {8, "determinant vs direct logarithm", 0},
        {9, "numeric residues at the origin", 5.0},
        {10, "saddle detection and D0 circles", 60.0},
        {11, "q-Mathieu graph topology", 0},
        {12, "framed transport of the four detours", 0},
    };
    return c;
}

SymExpr P(const char* s) { return parse_symexpr(s); }

Mat2 M(const char* a, const char* b, const char* c, const char* d) { return {P(a), P(b), P(c), P(d)}; }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Outcome equal(const SymExpr& want, const SymExpr& got) { return {want == got, to_string(want), to_string(got)}; }
Outcome equal(const Mat2& want, const Mat2& got) { return {want == got, to_string(want), to_string(got)}; }

Outcome below(double value, double tol, const std::string& what) {
    return {value < tol, what + " < " + num(tol), what + " = " + num(value)};
}

Mat2 word_matrix(const ModelBundle& b, const std::string& path) {
    return compose_path(parse_word(b.paths.at(path).word));
}

SymExpr word_trace(const ModelBundle& b, const std::string& path, TraceMode mode) {
    return regularized_trace(word_matrix(b, path), mode);
}

// Every surviving term of a flatness residual lies beyond xi^{order |k|}.
bool beyond(const Mat2& r, const std::string& xi, long bound) {
    for (const SymExpr* e : {&r.a, &r.b, &r.c, &r.d})
        for (const auto& [m, c] : e->terms())
            if (abs(m.exponent(xi)) <= bound) return false;
    return true;
}

Outcome riccati_oracle(const std::string& name, const Params& params) {
    const std::vector<cplx> pts = {cplx(0.3, 0.7), cplx(1.7, -0.4), cplx(-2.1, 0.9)};
    QdeModel m = builtin(name, params).model;
    SeriesRing<QI> ring(m);
    double worst = 0;
    bool zero = true;
    try {
        for (int sign : {1, -1}) {
            auto s = riccati_coeffs(ring, m, sign, 8);
            VerifyReport rep = verify_riccati(ring, s, pts);
            worst = std::max(worst, rep.max_residual);
            zero = zero && rep.symbolic_zero;
        }
    } catch (const ResidualTooLarge& e) {
        return {false, "residual 0 through order 8", "order " + std::to_string(e.order) + " residual " + num(e.value)};
    }
    return {zero && worst < 1e-10, "symbolic zero, max residual < 1e-10",
            std::string(zero ? "symbolic zero" : "nonzero symbolic residual") + ", max residual " + num(worst)};
}

Outcome hessenberg_oracle(const std::string& name) {
    QdeModel m = builtin(name).model;
    SeriesRing<QI> ring(m);
    auto s = riccati_coeffs(ring, m, 1, 6);
    auto det = log_r_coeffs(ring, s);
    auto dir = log_r_coeffs_direct(ring, s);
    for (size_t n = 0; n < det.size(); ++n) {
        RExpr<QI> diff = ring.normalize(ring.sub(det[n], dir[n]));
        if (!diff.is_zero()) return {false, "D_" + std::to_string(n + 1) + " agree", ring.str(diff)};
    }
    return {det.size() == 6, "D_1..D_6 agree", std::to_string(det.size()) + " coefficients agree"};
}

Outcome period_oracle(const QdeModel& m, double radius, int sign, long n, cplx want) {
    cplx got = contour_period(m, ContourSpec::loop(0, radius), sign, n);
    std::ostringstream w, g;
    w.precision(12);
    g.precision(12);
    w << want;
    g << got;
    return {std::abs(got - want) < 1e-8, w.str(), g.str()};
}

std::vector<Oracle> oracles() {
    std::vector<Oracle> o;

    o.push_back({1, "full_loop matrix", {"qairy"}, [] {
                     return equal(M("-Y^(-2)", "0", "i*xi^(-1)*Y^(-2) + i", "-Y^2"),
                                  word_matrix(builtin("qairy"), "full_loop"));
                 }});
    o.push_back({1, "full_loop trace", {"qairy"}, [] {
                     return equal(P("-Y^2 - Y^(-2)"), word_trace(builtin("qairy"), "full_loop", TraceMode::xi_graded));
                 }});

    o.push_back({2, "full_loop trace", {"qairy_kappa"}, [] {
                     return equal(P("-Y1*Y2 - Y1^(-1)*Y2^(-1)"),
                                  word_trace(builtin("qairy_kappa"), "full_loop", TraceMode::xi_graded));
                 }});

    o.push_back({3, "full_loop drop_all_xi trace", {"qhyper"}, [] {
                     return equal(P("XB^2 + XB^(-2) + XA^2*XB^(-2)"),
                                  word_trace(builtin("qhyper"), "full_loop", TraceMode::drop_all_xi));
                 }});
    o.push_back({3, "half_loop trace", {"qhyper"}, [] {
                     ModelBundle b = builtin("qhyper");
                     return equal(P("XA*XB^(-1)"), word_trace(b, "half_loop", b.paths.at("half_loop").mode));
                 }});

    o.push_back({4, "full_loop xi_graded trace", {"qmathieu"}, [] {
                     return equal(P("Y21*Y31*Y42*Y43*xi1^(-1)*xi2 + Y21*Y43*Y31^(-1)*Y42^(-1)"
                                    " + Y21*Y31^(-1)*Y42^(-1)*Y43^(-1) + Y31*Y42*Y43*Y21^(-1)"),
                                  word_trace(builtin("qmathieu"), "full_loop", TraceMode::xi_graded));
                 }});
    o.push_back({4, "anchored trace carries (x1/x2)^{2 pi i/hbar}", {"qmathieu"}, [] {
                     return equal(P("Y21*Y31*Y42*Y43*c_xi1^(-1)*c_xi2 + Y21*Y43*Y31^(-1)*Y42^(-1)"
                                    " + Y21*Y31^(-1)*Y42^(-1)*Y43^(-1) + Y31*Y42*Y43*Y21^(-1)"),
                                  anchor_rewrite(word_trace(builtin("qmathieu"), "full_loop", TraceMode::xi_graded)));
                 }});
    o.push_back({4, "four-charge form", {"qmathieu"}, [] {
                     ModelBundle b = builtin("qmathieu");
                     SymExpr charges = P("X_g3^(1/2)*X_g4^(1/2) + X_g3^(-1/2)*X_g4^(-1/2)"
                                         " + X_g1^(-1/2)*X_g2^(1/2)*X_gD0^(1/2) + X_g1^(1/2)*X_g2^(1/2)*X_g4*X_gD0^(-1/2)");
                     SymExpr tr = anchor_rewrite(word_trace(b, "full_loop", TraceMode::xi_graded));
                     return equal(charges.substitute(b.charge_dictionary), tr);
                 }});
    o.push_back({4, "X_g1 X_g2 X_g3 X_g4 = X_gD0", {"qmathieu"}, [] {
                     ModelBundle b = builtin("qmathieu");
                     return equal(P("X_gD0").substitute(b.charge_dictionary),
                                  P("X_g1*X_g2*X_g3*X_g4").substitute(b.charge_dictionary));
                 }});

    o.push_back({5, "S(0)^3 = 1", {}, [] { return equal(Mat2::identity(), compose_path(parse_word("S(0)*S(0)*S(0)"))); }});
    o.push_back({5, "S(-l) S(l) S(-l) = diag(xi^-l, xi^l), l in -3..3", {}, [] {
                     for (long l = -3; l <= 3; ++l) {
                         Mat2 want{SymExpr::sym("xi", Rat(-l)), 0, 0, SymExpr::sym("xi", Rat(l))};
                         Mat2 got = stokes_matrix(-l) * stokes_matrix(l) * stokes_matrix(-l);
                         if (!(got == want)) return equal(want, got);
                     }
                     return Outcome{true, "all seven", "all seven"};
                 }});
    o.push_back({5, "det = 1 for every constructor", {}, [] {
                     std::vector<std::pair<std::string, Mat2>> ms = {
                         {"Toff", transport_matrix(TransportKind::offdiag, "Y")},
                         {"Tdiag", transport_matrix(TransportKind::diag, "Y")},
                         {"cut", cut_matrix()}};
                     for (long l = -3; l <= 3; ++l) {
                         ms.emplace_back("S(" + std::to_string(l) + ")", stokes_matrix(l));
                         ms.emplace_back("Logcut(" + std::to_string(l) + ")", logcut_matrix(l, "xi"));
                     }
                     for (const auto& [name, m] : ms)
                         if (m.det() != SymExpr(1)) return Outcome{false, "det " + name + " = 1", to_string(m.det())};
                     return Outcome{true, "1", "1"};
                 }});
    o.push_back({5, "L- xi^{k sigma_3} L+ = 1 through order 6", {}, [] {
                     for (long k : {1L, 2L, -1L}) {
                         Mat2 r = flatness_residual(k, "xi", 6);
                         if (!beyond(r, "xi", 6 * std::abs(k)))
                             return Outcome{false, "residual beyond xi^" + std::to_string(6 * std::abs(k)), to_string(r)};
                     }
                     return Outcome{true, "flat", "flat"};
                 }});

    for (long l = -2; l <= 2; ++l)
        for (long lp = -2; lp <= 2; ++lp) {
            o.push_back({6, "opposite signature l=" + std::to_string(l) + " l'=" + std::to_string(lp), {}, [l, lp] {
                             SymExpr want = SymExpr::sym("Y", Rat(-2)) * SymExpr::sym("xi_b", Rat(l)) *
                                            SymExpr::sym("xi_bp", Rat(-lp));
                             return equal(want, fg_cross_ratio(Signature::opposite, l, lp));
                         }});
            o.push_back({6, "same signature l=" + std::to_string(l) + " l'=" + std::to_string(lp), {}, [l, lp] {
                             return equal(SymExpr(1), fg_cross_ratio(Signature::same, l, lp));
                         }});
        }

    o.push_back({7, "qairy", {"qairy"}, [] { return riccati_oracle("qairy", {}); }});
    o.push_back({7, "qairy_kappa(1/2)", {"qairy_kappa"}, [] {
                     return riccati_oracle("qairy_kappa", {{"kappa", QI(Rat(1, 2))}});
                 }});
    o.push_back({7, "qmathieu(0.03i, 0.97)", {"qmathieu"}, [] {
                     return riccati_oracle("qmathieu", {{"kappa", QI(Rat(0), Rat(3, 100))}, {"tau", QI(Rat(97, 100))}});
                 }});

    for (const char* name : {"qairy", "qairy_kappa", "qhyper", "qmathieu"})
        o.push_back({8, name, {name}, [n = std::string(name)] { return hessenberg_oracle(n); }});

    for (long n : {-1L, 0L, 1L})
        for (int sign : {1, -1})
            o.push_back({9, std::string("qairy sign ") + (sign > 0 ? "+" : "-") + " n=" + std::to_string(n), {"qairy"},
                         [n, sign] {
                             return period_oracle(builtin("qairy").model, 0.5, sign, n,
                                                  -sign * pi * pi - 4 * pi * pi * double(n));
                         }});
    for (int sign : {1, -1})
        o.push_back({9, std::string("qairy_kappa(1/2) sign ") + (sign > 0 ? "+" : "-"), {"qairy_kappa"}, [sign] {
                         return period_oracle(builtin("qairy_kappa", {{"kappa", QI(Rat(1, 2))}}).model, 0.25, sign, 0,
                                              -sign * 2 * pi * pi / 3);
                     }});

    o.push_back({10, "q-Airy critical phases on (-pi/2, pi/2)", {"qairy"}, [] {
                     auto s = find_saddles(builtin("qairy").model, -pi / 2, pi / 2, 63);
                     std::vector<double> ph;
                     for (const Saddle& x : s)
                         if (std::none_of(ph.begin(), ph.end(), [&](double t) { return std::abs(t - x.theta) < 1e-4; }))
                             ph.push_back(x.theta);
                     std::string got;
                     for (double t : ph) got += (got.empty() ? "" : ", ") + num(t);
                     return Outcome{ph.size() == 1 && std::abs(ph[0]) < 1e-3, "one phase within 1e-3 of 0",
                                    "{" + got + "}"};
                 }});
    o.push_back({10, "D0 spiral closes at theta = 0", {"qairy"}, [] {
                     QdeModel m = builtin("qairy").model;
                     double worst = 0;
                     for (cplx w0 : {cplx(-1, 0), cplx(0.3, 0.7)})
                         for (long n : {1L, 2L}) worst = std::max(worst, d0_circle_deviation(m, w0, n, 0.0));
                     return below(worst, 1e-6, "radial deviation");
                 }});

    o.push_back({11, "q-Mathieu at 0.6: branch points, primary lines, labels", {"qmathieu"}, [] {
                     StokesGraph g = read_graph(dump_graph(build_graph(builtin("qmathieu").model, 0.6)));
                     std::set<int> encircled;
                     for (const LogCut& c : g.log_cuts) encircled.insert(c.branch_point);
                     std::vector<std::multiset<long>> ells(g.branch_points.size());
                     int primaries = 0;
                     for (const Trajectory& t : g.trajectories)
                         if (t.source == SourceKind::branch_point) {
                             ++primaries;
                             ells.at(t.parent).insert(t.ell);
                         }
                     bool ok = g.branch_points.size() == 4 && primaries == 12 && encircled.size() == 2;
                     std::string got = std::to_string(g.branch_points.size()) + " branch points, " +
                                       std::to_string(primaries) + " primary lines, labels";
                     for (size_t b = 0; b < ells.size(); ++b) {
                         got += " [";
                         for (long e : ells[b]) got += " " + std::to_string(e);
                         got += encircled.count(int(b)) ? " ]*" : " ]";
                         bool zero = std::all_of(ells[b].begin(), ells[b].end(), [](long e) { return e == 0; });
                         bool unit = std::all_of(ells[b].begin(), ells[b].end(), [](long e) { return std::abs(e) == 1; });
                         ok = ok && ells[b].size() == 3 && (encircled.count(int(b)) ? unit : zero);
                     }
                     return Outcome{ok, "4 branch points, 12 primary lines, |l| = 1 on the two encircled (*), 0 elsewhere",
                                    got};
                 }});

    o.push_back({12, "four surviving words", {}, [] {
                     std::vector<Detour> d{{"Xa", 'i', 'j', 0}, {"Xb", 'j', 'i', 0}, {"Xc", 'j', 'i', 1}, {"Xd", 'i', 'j', -1}};
                     return equal(P("XPi + XPi*Xa*Xb + XPj + XPj*Xc*Xd"), framed_transport(d));
                 }});
    return o;
}

}  // namespace

int acceptance_count() { return static_cast<int>(criteria().size()); }

std::string acceptance_title(int id) {
    for (const Criterion& c : criteria())
        if (c.id == id) return c.title;
    throw std::out_of_range("no acceptance criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const std::string& model) {
    using clock = std::chrono::steady_clock;
    const auto all = oracles();
    std::vector<CriterionResult> out;
    for (const Criterion& c : criteria()) {
        if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
        CriterionResult r{c.id, c.title, c.budget, 0, true, {}};
        for (const Oracle& o : all) {
            if (o.criterion != c.id) continue;
            if (!model.empty() && std::find(o.models.begin(), o.models.end(), model) == o.models.end()) continue;
            auto t0 = clock::now();
            Outcome res;
            try {
                res = o.run();
            } catch (const std::exception& e) {
                res = {false, "no exception", e.what()};
            }
            double sec = std::chrono::duration<double>(clock::now() - t0).count();
            r.oracles.push_back({o.name, o.models, res.pass, res.expected, res.got, sec});
            r.seconds += sec;
            r.pass = r.pass && res.pass;
        }
        if (r.oracles.empty()) continue;
        if (c.budget > 0 && r.seconds >= c.budget) r.pass = false;
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_acceptance(const std::vector<CriterionResult>& results, bool records) {
    std::ostringstream o;
    for (const CriterionResult& r : results) {
        if (records) {
            nlohmann::json j = {{"criterion", r.id}, {"title", r.title},          {"pass", r.pass},
                                {"seconds", r.seconds}, {"budget", r.budget}, {"oracles", nlohmann::json::array()}};
            for (const OracleResult& x : r.oracles)
                j["oracles"].push_back({{"name", x.name},
                                        {"models", x.models},
                                        {"pass", x.pass},
                                        {"expected", x.expected},
                                        {"got", x.got},
                                        {"seconds", x.seconds}});
            o << j.dump() << "\n";
            continue;
        }
        char head[160];
        std::snprintf(head, sizeof head, "%s criterion %2d: %s (%.2f s", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(),
                      r.seconds);
        o << head;
        if (r.budget > 0) o << ", budget " << num(r.budget) << " s";
        o << ")\n";
        if (r.budget > 0 && r.seconds >= r.budget) o << "    over budget\n";
        for (const OracleResult& x : r.oracles)
            if (!x.pass) o << "    " << x.name << "\n      expected: " << x.expected << "\n      got:      " << x.got << "\n";
    }
    return o.str();
}

}  // namespace qwkb
