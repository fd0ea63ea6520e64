#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

#include "qwkb/models.hpp"
#include "qwkb/network.hpp"
#include "qwkb/periods.hpp"

using namespace qwkb;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<const Trajectory*> primaries_of(const StokesGraph& g, int bp) {
    std::vector<const Trajectory*> out;
    for (const auto& t : g.trajectories)
        if (t.source == SourceKind::branch_point && t.parent == bp) out.push_back(&t);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->ray < b->ray; });
    return out;
}

int count(const std::string& hay, const std::string& needle) {
    int n = 0;
    for (size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

std::set<double> phases(const std::vector<Saddle>& s) {
    std::set<double> out;
    for (const auto& x : s) {
        bool seen = std::any_of(out.begin(), out.end(), [&](double t) { return std::abs(t - x.theta) < 1e-4; });
        if (!seen) out.insert(x.theta);
    }
    return out;
}

}  // namespace

TEST_CASE("trajectory labels") {
    CHECK_THROWS_AS((TrajectoryLabel{1, 1, 0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((TrajectoryLabel{2, 1, 0}.validate()), std::invalid_argument);
    CHECK_NOTHROW((TrajectoryLabel{1, 1, 2}.validate()));
    CHECK(to_string(TrajectoryLabel{1, -1, 0}) == "(+-,0)");
    CHECK(to_string(TrajectoryLabel{-1, -1, -2}) == "(--,-2)");
}

TEST_CASE("spawn rule table") {
    Caps caps;
    caps.max_generation = 2;
    caps.max_abs_n = 5;
    // same type: nothing is generated
    CHECK(spawn_rule({1, -1, 0}, {1, -1, 1}, caps).empty());
    CHECK(spawn_rule({1, 1, 1}, {-1, -1, 2}, caps).empty());
    // opposite types with N = 1
    auto v = spawn_rule({1, -1, 0}, {-1, 1, 1}, caps);
    std::vector<TrajectoryLabel> want = {{1, -1, 1}, {-1, 1, 2}, {1, -1, 2}, {-1, 1, 3}, {1, 1, 1}, {1, 1, 2}};
    CHECK(v == want);
    // N = 0 would only reproduce the incoming pair
    CHECK(spawn_rule({1, -1, 1}, {-1, 1, -1}, caps).empty());
    // off-diagonal against a diagonal line, either order
    auto d = spawn_rule({1, 1, 2}, {1, -1, 0}, caps);
    CHECK(d == std::vector<TrajectoryLabel>{{1, -1, 2}, {1, -1, 4}});
    caps.max_abs_n = 3;
    CHECK(spawn_rule({1, -1, 0}, {1, 1, 2}, caps) == std::vector<TrajectoryLabel>{{1, -1, 2}});
}

TEST_CASE("q-Airy graph at pi/5: primary lines and S^(l) labels") {
    QdeModel m = builtin("qairy").model;
    StokesGraph g = build_graph(m, pi / 5);
    REQUIRE(g.branch_points.size() == 2);
    REQUIRE(g.log_cuts.size() == 1);
    const int inside = g.log_cuts[0].branch_point;
    CHECK(std::abs(g.branch_points[inside].position - cplx(-1, 0)) < 1e-12);
    for (int b = 0; b < 2; ++b) {
        auto P = primaries_of(g, b);
        REQUIRE(P.size() == 3);
        for (auto* t : P) {
            CHECK(t->label.n == 0);
            CHECK(t->label.i == P[0]->label.i);  // one signature per branch point
            CHECK(t->label.i == (g.branch_points[b].signature == SignatureTag::pm ? 1 : -1));
        }
        std::vector<long> ells;
        for (auto* t : P) ells.push_back(t->ell);
        if (b == inside) CHECK(ells == std::vector<long>{-1, 1, -1});
        else CHECK(ells == std::vector<long>{0, 0, 0});
    }
    CHECK(g.branch_points[0].signature != g.branch_points[1].signature);
}

TEST_CASE("q-Mathieu graph at 0.6: four branch points, twelve primary lines") {
    QdeModel m = builtin("qmathieu").model;
    StokesGraph g = build_graph(m, 0.6);
    REQUIRE(g.branch_points.size() == 4);
    int primaries = 0;
    for (const auto& t : g.trajectories) primaries += t.source == SourceKind::branch_point;
    CHECK(primaries == 12);
    std::set<int> encircled;
    for (const auto& c : g.log_cuts) encircled.insert(c.branch_point);
    REQUIRE(encircled.size() == 2);
    for (int b = 0; b < 4; ++b) {
        std::multiset<long> ells;
        for (auto* t : primaries_of(g, b)) ells.insert(t->ell);
        if (encircled.count(b)) CHECK(ells == std::multiset<long>{-1, -1, 1});
        else CHECK(ells == std::multiset<long>{0, 0, 0});
    }
    auto it = encircled.begin();
    CHECK(g.branch_points[*it].signature != g.branch_points[*std::next(it)].signature);
}

TEST_CASE("projection keeps the Stokes condition and mass increases") {
    for (auto [name, theta] : {std::pair{"qairy", pi / 5}, std::pair{"qmathieu", 0.6}, std::pair{"qhyper", 0.3}}) {
        StokesGraph g = build_graph(builtin(name).model, theta);
        for (const auto& t : g.trajectories) {
            for (size_t q = 0; q < t.points.size(); ++q) {
                CHECK(std::abs(t.points[q].im_f) <= 1e-6 * (1 + t.points[q].mass));
                if (q) CHECK(t.points[q].mass >= t.points[q - 1].mass - 1e-9);
            }
        }
    }
}

TEST_CASE("mass equals the integral of |Delta dx/x| along the polyline") {
    QdeModel m = builtin("qairy").model;
    StokesGraph g = build_graph(m, pi / 5);
    const cplx I(0, 1);
    for (const auto& t : g.trajectories) {
        if (t.source != SourceKind::branch_point) continue;
        double sum = 0;
        for (size_t q = 1; q < t.points.size(); ++q) {
            const auto &a = t.points[q - 1], &b = t.points[q];
            cplx da = a.log_j - a.log_i + 2.0 * pi * I * double(t.lift);
            cplx db = b.log_j - b.log_i + 2.0 * pi * I * double(t.lift);
            cplx dw = b.w - a.w, wm = (a.w + b.w) / 2.0;
            sum += std::abs((da + db) / 2.0 * dw / wm);
        }
        CHECK(sum == doctest::Approx(t.points.back().mass).epsilon(1e-3));
    }
}

TEST_CASE("equal shifts of both indices leave the line unchanged") {
    QdeModel m = builtin("qmathieu").model;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ang(0, 2 * pi), rad(0.4, 2.0), th(-1.0, 1.0);
    std::uniform_int_distribution<long> sh(-3, 3);
    Caps caps;
    caps.max_mass = 15;
    for (int trial = 0; trial < 12; ++trial) {
        cplx start = std::polar(rad(rng), ang(rng));
        double theta = th(rng);
        long ni = sh(rng), nj = sh(rng);
        int i = trial % 2 ? 1 : -1, j = trial % 3 ? -i : i;
        if (i == j && ni == nj) nj += 1;
        Trajectory a = trace_line(m, theta, start, i, j, ni, nj, caps);
        Trajectory b = trace_line(m, theta, start, i, j, ni + 1, nj + 1, caps);
        REQUIRE(a.points.size() == b.points.size());
        bool same = true;
        for (size_t q = 0; q < a.points.size(); ++q) same = same && a.points[q].w == b.points[q].w;
        CHECK(same);
        CHECK(a.label == b.label);
    }
}

TEST_CASE("D0 lines close into circles at theta = 0") {
    for (const char* name : {"qairy", "qmathieu", "qhyper"}) {
        QdeModel m = builtin(name).model;
        for (cplx w0 : {cplx(-1, 0), cplx(0.3, 0.7)})
            for (long n : {1L, 2L, -1L}) CHECK(d0_circle_deviation(m, w0, n, 0.0) < 1e-6);
        // away from theta = 0 they are genuine spirals
        CHECK(d0_circle_deviation(m, cplx(-1, 0), 1, 0.3) > 1e-2);
    }
}

TEST_CASE("q-Airy saddles: only theta = 0") {
    QdeModel m = builtin("qairy").model;
    auto s = find_saddles(m, -pi / 2, pi / 2, 63);
    auto ph = phases(s);
    REQUIRE(ph.size() == 1);
    CHECK(std::abs(*ph.begin()) < 1e-3);
    // oracle: the self-loop of x = 1 around the origin has a real period, so its phase is 0 mod pi
    VorosResult loop = voros_leading(m, ContourSpec::segment({1.0, cplx(0, 0.5), -0.5, cplx(0, -0.5), 1.0}), 1);
    REQUIRE(loop.closes);
    CHECK(std::abs(std::remainder(std::arg(loop.exponent), pi) - *ph.begin()) < 1e-3);
    // the saddle line carries exactly that mass
    Caps caps;
    for (const auto& t : primary_lines(m, s[0].theta, s[0].from, caps))
        if (t.stop == "branch_point") CHECK(t.points.back().mass == doctest::Approx(std::abs(loop.exponent)).epsilon(1e-3));

    CHECK(find_saddles(m, 0.1, 1.0, 16).empty());
}

TEST_CASE("q-Airy_kappa saddle at theta = 0") {
    QdeModel m = builtin("qairy_kappa", {{"kappa", QI(Rat(1, 2))}}).model;
    auto ph = phases(find_saddles(m, -0.05, 0.05, 6));
    REQUIRE(ph.size() == 1);
    CHECK(std::abs(*ph.begin()) < 1e-3);
}

TEST_CASE("saddle sweep: parallel equals serial") {
    QdeModel m = builtin("qmathieu").model;
    auto p = find_saddles(m, -0.1, 0.1, 8, {}, true);
    auto s = find_saddles(m, -0.1, 0.1, 8, {}, false);
    REQUIRE(p.size() == s.size());
    for (size_t q = 0; q < p.size(); ++q) {
        CHECK(p[q].theta == s[q].theta);
        CHECK(p[q].from == s[q].from);
        CHECK(p[q].to == s[q].to);
    }
}

TEST_CASE("graph dump: determinism, parallel equals serial, reader round-trip") {
    QdeModel m = builtin("qmathieu").model;
    std::string a = dump_graph(build_graph(m, 0.6));
    std::string b = dump_graph(build_graph(m, 0.6));
    std::string c = dump_graph(build_graph(m, 0.6, {}, false));
    CHECK(a == b);
    CHECK(a == c);
    StokesGraph r = read_graph(a);
    CHECK(dump_graph(r) == a);
    CHECK_THROWS(read_graph("{\"format\": \"other\"}"));
}

TEST_CASE("svg rendering") {
    StokesGraph empty;
    std::string e = render_svg(empty);
    CHECK(e.find("<svg") != std::string::npos);
    CHECK(e.find("</svg>") != std::string::npos);
    CHECK(count(e, "class=\"axis\"") == 2);
    CHECK(count(e, "class=\"trajectory\"") == 0);

    StokesGraph g = build_graph(builtin("qairy").model, pi / 5);
    std::string svg = render_svg(g);
    CHECK(count(svg, "class=\"trajectory\"") == static_cast<int>(read_graph(dump_graph(g)).trajectories.size()));
    CHECK(count(svg, "class=\"branch-point\"") == 2);
    CHECK(count(svg, "class=\"log-cut\"") == 2);
    CHECK(count(svg, "class=\"sqrt-cut\"") == 6);
    CHECK(svg == render_svg(g));
}
