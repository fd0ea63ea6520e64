#include "qwkb/periods.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "qwkb/series.hpp"

namespace qwkb {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

// One smooth piece of a contour, parametrized by s in [0, 1].
struct Piece {
    bool in_w = true;  // z is w (segment) or x (loop arc)
    cplx a, b;         // segment ends
    cplx center;       // loop arc
    double radius = 0, theta0 = 0, theta1 = 0;
    bool loop = false;

    // t(s) = sin^2(pi s/2) clusters nodes at segment ends where sqrt behaviour sits
    std::pair<cplx, cplx> z(double s) const {
        if (loop) {
            double th = theta0 + (theta1 - theta0) * s;
            cplx e = std::polar(radius, th);
            return {center + e, kI * e * (theta1 - theta0)};
        }
        double h = std::sin(0.5 * kPi * s), t = h * h, dt = 0.5 * kPi * std::sin(kPi * s);
        return {a + (b - a) * t, (b - a) * dt};
    }
};

struct State {
    double s = 0;
    cplx w, r, l1, l2;
};

class Tracker {
public:
    Tracker(const QdeModel& m, int sign) : m_(m), sign_(sign) {}

    State principal(const Piece& p, double s) const {
        State st;
        st.s = s;
        cplx z = p.z(s).first;
        st.w = p.in_w ? z : m_.w_of(z);
        cplx t0 = m_.t0(st.w);
        st.r = principal_sqrt(t0 * t0 - 1.0);
        st.l1 = std::log(t0 + double(sign_) * st.r);
        st.l2 = std::log(t0 - double(sign_) * st.r);
        return st;
    }

    // Continuation from `from` to parameter s; nullopt when the step is too large to be unambiguous.
    std::optional<State> step(const Piece& p, const State& from, double s) const {
        State st;
        st.s = s;
        cplx z = p.z(s).first;
        if (p.in_w) {
            st.w = z;
        } else {
            cplx w0 = m_.w_of(z);
            st.w = w0;
            for (int k = 1; k < m_.cover_degree; ++k) {
                cplx cand = w0 * std::polar(1.0, 2 * kPi * k / m_.cover_degree);
                if (std::abs(cand - from.w) < std::abs(st.w - from.w)) st.w = cand;
            }
            if (std::abs(st.w - from.w) > 0.25 * std::abs(from.w)) return std::nullopt;
        }
        cplx t0 = m_.t0(st.w);
        cplx r = principal_sqrt(t0 * t0 - 1.0);
        st.r = std::abs(r - from.r) <= std::abs(r + from.r) ? r : -r;
        cplx y1 = t0 + double(sign_) * st.r, y2 = t0 - double(sign_) * st.r;
        cplx y1p = std::exp(from.l1), y2p = std::exp(from.l2);
        cplx d1 = std::log(y1 / y1p), d2 = std::log(y2 / y2p);
        if (std::abs(d1) > 0.3 || std::abs(d2) > 0.3) return std::nullopt;
        st.l1 = from.l1 + d1;
        st.l2 = from.l2 + d2;
        return st;
    }

    // Nodes covering [min(s0, s1), max(s0, s1)], starting from a known state at s0.
    void extend(const Piece& p, const State& start, double s1, std::vector<State>& out) const {
        out.push_back(start);
        const int M = 256;
        State cur = start;
        for (int k = 1; k <= M; ++k) {
            double target = start.s + (s1 - start.s) * k / M;
            refine(p, cur, target, 0, out);
            cur = out.back();
        }
    }

    const QdeModel& model() const { return m_; }

private:
    void refine(const Piece& p, const State& from, double s, int depth, std::vector<State>& out) const {
        if (auto st = step(p, from, s)) {
            out.push_back(*st);
            return;
        }
        if (depth > 40) throw BranchTrackingLost("log y continuation lost near s = " + std::to_string(s));
        double mid = 0.5 * (from.s + s);
        refine(p, from, mid, depth + 1, out);
        State m = out.back();
        refine(p, m, s, depth + 1, out);
    }

    const QdeModel& m_;
    int sign_;
};

// Dense continuation data for one piece; evaluation continues from the nearest node.
struct TrackedPiece {
    Piece piece;
    std::vector<State> nodes;  // sorted by s

    State at(const Tracker& tr, double s) const {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), s, [](const State& n, double v) { return n.s < v; });
        // a node sitting on a branch point has r = 0 and carries no sheet information
        auto usable = [](const State& n) { return std::abs(n.r) > 1e-12; };
        const State* best = nullptr;
        for (auto c : {it, it == nodes.begin() ? nodes.end() : std::prev(it)}) {
            if (c == nodes.end()) continue;
            if (!best || (usable(*c) && (!usable(*best) || std::abs(c->s - s) < std::abs(best->s - s)))) best = &*c;
        }
        if (!usable(*best)) {
            auto nb = std::find_if(nodes.begin(), nodes.end(), usable);
            if (s > 0.5) nb = std::find_if(nodes.rbegin(), nodes.rend(), usable).base() - 1;
            best = &*nb;
        }
        auto st = tr.step(piece, *best, s);
        if (!st) throw BranchTrackingLost("continuation gap at s = " + std::to_string(s));
        return *st;
    }
};

void sort_nodes(std::vector<State>& v) {
    std::sort(v.begin(), v.end(), [](const State& a, const State& b) { return a.s < b.s; });
}

std::vector<TrackedPiece> track(const Tracker& tr, const std::vector<Piece>& pieces, size_t start_piece,
                                double start_s, std::optional<State> initial = std::nullopt) {
    std::vector<TrackedPiece> out(pieces.size());
    for (size_t i = 0; i < pieces.size(); ++i) out[i].piece = pieces[i];
    State s0 = initial ? *initial : tr.principal(pieces[start_piece], start_s);
    s0.s = start_s;
    {
        auto& n = out[start_piece].nodes;
        tr.extend(pieces[start_piece], s0, 1.0, n);
        std::vector<State> back;
        tr.extend(pieces[start_piece], s0, 0.0, back);
        n.insert(n.end(), back.begin() + 1, back.end());
        sort_nodes(n);
    }
    for (size_t i = start_piece + 1; i < pieces.size(); ++i) {
        State st = out[i - 1].nodes.back();
        st.s = 0.0;
        tr.extend(pieces[i], st, 1.0, out[i].nodes);
        sort_nodes(out[i].nodes);
    }
    for (size_t i = start_piece; i-- > 0;) {
        State st = out[i + 1].nodes.front();
        st.s = 1.0;
        tr.extend(pieces[i], st, 0.0, out[i].nodes);
        sort_nodes(out[i].nodes);
    }
    return out;
}

cplx integrate(const std::function<cplx(double)>& f) {
    double err = 0;
    cplx v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14, &err);
    if (!(err <= 1e-9 * (1 + std::abs(v))))
        throw EndpointSingularityUnresolved("quadrature error estimate " + std::to_string(err));
    return v;
}

std::vector<cplx> branch_xs(const QdeModel& m) {
    std::vector<cplx> xs;
    for (const auto& b : branch_points(m)) xs.push_back(b.position);
    return xs;
}

std::vector<Piece> loop_pieces(const QdeModel& m, const ContourSpec& spec) {
    if (spec.radius <= 0 || spec.winding == 0) throw std::invalid_argument("loop needs radius > 0 and winding != 0");
    // clearance from branch points and the origin, both measured in the x-plane
    for (cplx wb : branch_xs(m)) {
        cplx xb = m.x_of(wb);
        if (std::abs(std::abs(xb - spec.center) - spec.radius) < spec.clearance)
            throw ContourClearance("loop passes within clearance of a branch point");
    }
    if (std::abs(std::abs(spec.center) - spec.radius) < spec.clearance)
        throw ContourClearance("loop passes within clearance of the origin");
    std::vector<Piece> ps;
    const int per_turn = 8;
    const int P = per_turn * std::abs(spec.winding);
    const double total = 2 * kPi * spec.winding;
    for (int k = 0; k < P; ++k) {
        Piece p;
        p.loop = true;
        p.in_w = false;
        p.center = spec.center;
        p.radius = spec.radius;
        p.theta0 = spec.start_angle + total * k / P;
        p.theta1 = spec.start_angle + total * (k + 1) / P;
        ps.push_back(p);
    }
    return ps;
}

// Sheets are principal at angle 0 of the circle and carried along the arc to the start angle,
// so the period does not depend on where the loop starts.
std::vector<TrackedPiece> track_loop(const Tracker& tr, const QdeModel& m, const ContourSpec& spec) {
    auto pieces = loop_pieces(m, spec);
    double a = std::fmod(spec.start_angle, 2 * kPi);
    if (a < 0) a += 2 * kPi;
    std::optional<State> init;
    if (a != 0.0) {
        Piece lead = pieces.front();
        lead.theta0 = 0.0;
        lead.theta1 = a;
        init = track(tr, {lead}, 0, 0.0).front().nodes.back();
    }
    return track(tr, pieces, 0, 0.0, init);
}

double seg_distance(cplx p, cplx a, cplx b) {
    cplx d = b - a;
    double t = std::norm(d) == 0 ? 0 : std::clamp(std::real((p - a) * std::conj(d)) / std::norm(d), 0.0, 1.0);
    return std::abs(a + d * t - p);
}

}  // namespace

ContourSpec ContourSpec::loop(cplx center, double radius, int winding, double start_angle) {
    ContourSpec s;
    s.kind = Kind::loop;
    s.center = center;
    s.radius = radius;
    s.winding = winding;
    s.start_angle = start_angle;
    return s;
}

ContourSpec ContourSpec::segment(std::vector<cplx> waypoints) {
    ContourSpec s;
    s.kind = Kind::segment;
    s.waypoints = std::move(waypoints);
    return s;
}

cplx contour_period(const QdeModel& m, const ContourSpec& spec, int sign, long n) {
    if (spec.kind != ContourSpec::Kind::loop) throw std::invalid_argument("contour_period needs a loop");
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    Tracker tr(m, sign);
    auto tracked = track_loop(tr, m, spec);
    cplx total = 0;
    for (const auto& tp : tracked)
        total += integrate([&](double s) {
            State st = tp.at(tr, s);
            auto [x, dx] = tp.piece.z(s);
            return (st.l1 + 2 * kPi * kI * double(n)) * dx / x;
        });
    return total;
}

std::vector<cplx> period_series(const QdeModel& m, const ContourSpec& spec, int sign, int N) {
    std::vector<cplx> out{contour_period(m, spec, sign, 0)};
    if (N <= 0) return out;
    SeriesRing<QI> ring(m);
    auto s = riccati_coeffs(ring, m, sign, N);
    auto D = log_r_coeffs(ring, s);
    Tracker tr(m, sign);
    auto tracked = track_loop(tr, m, spec);
    for (const auto& d : D) {
        cplx total = 0;
        for (const auto& tp : tracked)
            total += integrate([&](double u) {
                State st = tp.at(tr, u);
                auto [x, dx] = tp.piece.z(u);
                return ring.eval(d, st.w, st.r) * dx / x;
            });
        out.push_back(total);
    }
    return out;
}

VorosResult voros_leading(const QdeModel& m, const ContourSpec& spec, int sign, LiftRule lift) {
    if (spec.kind != ContourSpec::Kind::segment || spec.waypoints.size() < 2)
        throw std::invalid_argument("voros_leading needs a segment with at least two waypoints");
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    const auto& wp = spec.waypoints;
    VorosResult res;
    if (wp.size() == 2 && std::abs(wp[0] - wp[1]) < 1e-15) return res;
    std::vector<Piece> ps;
    for (size_t i = 0; i + 1 < wp.size(); ++i) {
        Piece p;
        p.a = wp[i];
        p.b = wp[i + 1];
        ps.push_back(p);
    }
    // interior of the path keeps clear of the origin and of branch points other than its ends
    for (size_t i = 0; i < ps.size(); ++i) {
        if (seg_distance(0.0, ps[i].a, ps[i].b) < spec.clearance)
            throw ContourClearance("segment passes within clearance of the origin");
        for (cplx wb : branch_xs(m)) {
            bool is_end = std::abs(wb - wp.front()) < 1e-9 || std::abs(wb - wp.back()) < 1e-9;
            if (!is_end && seg_distance(wb, ps[i].a, ps[i].b) < spec.clearance)
                throw ContourClearance("segment passes within clearance of a branch point");
        }
    }
    const size_t P = ps.size();
    size_t start_piece = P / 2;
    double start_s = P % 2 == 0 ? 0.0 : 0.5;
    Tracker tr(m, sign);
    auto tracked = track(tr, ps, start_piece, start_s);
    auto diff = [&](const State& st) { return st.l1 - st.l2; };
    cplx d0 = diff(tracked.front().at(tr, 0.0)), d1 = diff(tracked.back().at(tr, 1.0));
    res.shift = lift.kind == LiftRule::Kind::closing ? -std::lround(d0.imag() / (2 * kPi)) : lift.shift;
    const cplx sh = 2 * kPi * kI * double(res.shift);
    res.start_value = d0 + sh;
    res.end_value = d1 + sh;
    res.closes = std::abs(res.start_value) < 1e-6 && std::abs(res.end_value) < 1e-6;
    const int c = m.cover_degree;
    for (const auto& tp : tracked)
        res.exponent += integrate([&](double s) {
            State st = tp.at(tr, s);
            auto [w, dw] = tp.piece.z(s);
            return (diff(st) + sh) * double(c) * dw / w;
        });
    return res;
}

}  // namespace qwkb
