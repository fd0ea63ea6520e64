#include "qwkb/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

namespace qwkb {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

double wrap_2pi(double a) {
    a = std::fmod(a, 2 * kPi);
    return a < 0 ? a + 2 * kPi : a;
}

// Tracked sheet data at w; y_i = T0 + r, y_j = T0 - r, so r = (y_i - y_j)/2.
struct Sheets {
    cplx w, r, yi, yj, li, lj;
};

Sheets sheets_from(const QdeModel& m, cplx w, cplx r) {
    cplx t = m.t0(w);
    Sheets s{w, r, t + r, t - r, 0, 0};
    s.li = std::log(s.yi);
    s.lj = std::log(s.yj);
    return s;
}

Sheets sheets_from_point(const TrajectoryPoint& p) {
    cplx yi = std::exp(p.log_i), yj = std::exp(p.log_j);
    return {p.w, (yi - yj) / 2.0, yi, yj, p.log_i, p.log_j};
}

// Continuation of the tracked branches from p to w; fails when the step is too large to trust.
std::optional<Sheets> continue_to(const QdeModel& m, const Sheets& p, cplx w) {
    cplx t = m.t0(w);
    cplx r = principal_sqrt(t * t - 1.0);
    if (std::abs(r - p.r) > std::abs(r + p.r)) r = -r;
    Sheets s{w, r, t + r, t - r, 0, 0};
    cplx di = std::log(s.yi / p.yi), dj = std::log(s.yj / p.yj);
    if (std::abs(di) > 0.3 || std::abs(dj) > 0.3) return std::nullopt;
    s.li = p.li + di;
    s.lj = p.lj + dj;
    return s;
}

struct Tracer {
    const QdeModel& m;
    double theta;
    cplx rot;  // e^{-i theta}
    double c;
    std::vector<cplx> bps;
    double scale;
    Caps caps;
    bool diag = false;
    long lift = 0;

    Tracer(const QdeModel& model, double th, std::vector<cplx> b, double sc, Caps cp)
        : m(model), theta(th), rot(std::polar(1.0, -th)), c(model.cover_degree), bps(std::move(b)), scale(sc),
          caps(cp) {}

    cplx delta(const Sheets& s) const {
        cplx d = 2.0 * kPi * kI * static_cast<double>(lift);
        return diag ? d : d + s.lj - s.li;
    }
    std::optional<Sheets> at(const Sheets& base, cplx w) const {
        if (diag) return Sheets{w, 0, 0, 0, 0, 0};
        return continue_to(m, base, w);
    }
    // unit tangent of increasing mass
    std::optional<cplx> tangent(const Sheets& base, cplx w) const {
        auto s = at(base, w);
        if (!s) return std::nullopt;
        cplx d = delta(*s);
        if (std::abs(d) == 0.0) return std::nullopt;
        cplx v = w / (c * d * rot);
        return v / std::abs(v);
    }
    // int_{base.w}^{w1} c Delta dw / w, 3-point Gauss-Legendre
    cplx increment(const Sheets& base, cplx w1) const {
        static const double xs[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
        static const double ws[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
        cplx w0 = base.w, mid = (w0 + w1) / 2.0, half = (w1 - w0) / 2.0, sum = 0;
        for (int k = 0; k < 3; ++k) {
            cplx w = mid + half * xs[k];
            auto s = at(base, w);
            sum += ws[k] * c * delta(s ? *s : base) / w;
        }
        return sum * half;
    }
    double singular_distance(cplx w) const {
        double d = std::abs(w);
        for (cplx b : bps) d = std::min(d, std::abs(w - b));
        return d;
    }
    TrajectoryPoint point(const Sheets& s, cplx F) const {
        cplx g = rot * F;
        return {s.w, diag ? cplx(0) : s.li, diag ? cplx(0) : s.lj, g.real(), g.imag()};
    }

    // Newton projection onto Im[e^{-i theta} F] = 0 along the normal direction.
    void project(Sheets& s, cplx& F) const {
        for (int it = 0; it < 4; ++it) {
            double e = (rot * F).imag();
            if (std::abs(e) <= 1e-13 * (1.0 + std::abs(F))) return;
            cplx dF = -kI * e / rot;
            cplx d = delta(s);
            if (std::abs(d) == 0.0) return;
            cplx w1 = s.w + dF * s.w / (c * d);
            auto s1 = at(s, w1);
            if (!s1) return;
            F += increment(s, w1);
            s = *s1;
        }
    }

    // Evolves from s with F = F0; source < 0 for lines not born at a branch point.
    Trajectory run(Sheets s, cplx F, int source, double seed_eps) const {
        // Dormand-Prince 5(4)
        static const double a[7][6] = {{0, 0, 0, 0, 0, 0},
                                       {1.0 / 5, 0, 0, 0, 0, 0},
                                       {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
                                       {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
                                       {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
                                       {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
                                       {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
        static const double b5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
        static const double b4[7] = {5179.0 / 57600,    0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200,
                                     187.0 / 2100, 1.0 / 40};
        Trajectory t;
        project(s, F);
        t.points.push_back(point(s, F));
        const double tol = 1e-10 * scale;
        const double hit = 2.0 * seed_eps;
        const cplx start = s.w;
        bool left_source = source < 0;
        double h = 0.1 * std::max(singular_distance(s.w), hit);
        int steps = 0, rejects = 0;
        while (true) {
            if (steps >= caps.max_steps) {
                t.stop = "steps";
                t.capped = true;
                break;
            }
            h = std::min(h, 0.1 * std::max(singular_distance(s.w), hit));
            if (h < 1e-13 * scale || rejects > 200) {
                t.stop = "stiff";
                break;
            }
            std::array<cplx, 7> k{};
            bool ok = true;
            for (int st = 0; st < 7 && ok; ++st) {
                cplx w = s.w;
                for (int q = 0; q < st; ++q) w += h * a[st][q] * k[q];
                auto tg = tangent(s, w);
                if (!tg) ok = false;
                else k[st] = *tg;
            }
            if (!ok) {
                h /= 2;
                ++rejects;
                continue;
            }
            cplx w5 = s.w, w4 = s.w;
            for (int st = 0; st < 7; ++st) {
                w5 += h * b5[st] * k[st];
                w4 += h * b4[st] * k[st];
            }
            double err = std::abs(w5 - w4);
            if (err > tol) {
                h *= std::max(0.2, 0.9 * std::pow(tol / err, 0.2));
                ++rejects;
                continue;
            }
            auto s1 = at(s, w5);
            if (!s1) {
                h /= 2;
                ++rejects;
                continue;
            }
            F += increment(s, w5);
            s = *s1;
            project(s, F);
            t.points.push_back(point(s, F));
            ++steps;
            rejects = 0;
            h *= err > 0 ? std::min(4.0, 0.9 * std::pow(tol / err, 0.2)) : 4.0;

            double r = std::abs(s.w);
            if (!left_source && std::abs(s.w - start) > 5.0 * hit) left_source = true;
            if (t.points.back().mass > caps.max_mass) {
                t.stop = "mass";
                t.capped = true;
                break;
            }
            if (r < caps.stop_radius * scale) {
                t.stop = "puncture";
                break;
            }
            if (r > caps.max_radius * scale) {
                t.stop = "radius";
                t.capped = true;
                break;
            }
            bool stop = false;
            for (size_t b = 0; b < bps.size() && !stop; ++b) {
                if (static_cast<int>(b) == source && !left_source) continue;
                // a line passing a branch point on another log branch keeps Delta away from zero
                if (std::abs(s.w - bps[b]) < hit && std::abs(delta(s)) < 0.5) stop = true;
            }
            if (stop) {
                t.stop = "branch_point";
                break;
            }
        }
        return t;
    }
};

std::vector<cplx> positions(const std::vector<BranchPoint>& bps) {
    std::vector<cplx> out;
    for (const auto& b : bps) out.push_back(b.position);
    return out;
}

double seed_distance(const std::vector<BranchPoint>& bps, size_t i, double scale) {
    double d = std::abs(bps[i].position);
    for (size_t j = 0; j < bps.size(); ++j)
        if (j != i) d = std::min(d, std::abs(bps[j].position - bps[i].position));
    return 1e-3 * std::min(scale, d);
}

// Direction (in w) of the k-th ray: arg(x - x0) = (2/3)(theta - arg(c0/x0) + pi k).
double ray_angle(const QdeModel& m, const BranchPoint& bp, double theta, int k) {
    cplx w0 = bp.position, x0 = m.x_of(w0);
    double ax = 2.0 / 3.0 * (theta - std::arg(bp.c0 / x0) + kPi * k);
    return wrap_2pi(ax + std::arg(w0 / x0));
}

// Direction (in w) of the principal square-root cut at a branch point.
double principal_cut_angle(const QdeModel& m, const BranchPoint& bp) {
    cplx w0 = bp.position, x0 = m.x_of(w0);
    return wrap_2pi(kPi - std::arg(bp.c0 * bp.c0) + std::arg(w0 / x0));
}

struct Seed {
    Sheets s;
    cplx F;
    bool pm = true;  // principal labeling gives type (+-) on this ray
};

// Sheets at the seed point with i chosen so the mass increases away from the branch point.
Seed seed_ray(const QdeModel& m, const BranchPoint& bp, double theta, double angle, double eps) {
    static const double xs[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                 0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double ws[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066661229514, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066661229514, 0.2223810344533745, 0.1012285362903763};
    const cplx w0 = bp.position, ws_pt = w0 + std::polar(eps, angle);
    const double c = m.cover_degree;
    cplx t = m.t0(ws_pt);
    Sheets top = sheets_from(m, ws_pt, principal_sqrt(t * t - 1.0));
    // F for Delta = log(y_- / y_+) on w = w0 + (ws - w0) u^2, nodes continued inward from u = 1
    cplx F = 0;
    Sheets cur = top;
    for (int q = 7; q >= 0; --q) {
        double u = 0.5 * (xs[q] + 1.0);
        cplx w = w0 + (ws_pt - w0) * u * u;
        cplx tw = m.t0(w);
        cplx r = principal_sqrt(tw * tw - 1.0);
        if (std::abs(r - cur.r) > std::abs(r + cur.r)) r = -r;
        cur = {w, r, tw + r, tw - r, 0, 0};
        cplx d = std::log(cur.yj / cur.yi);
        F += 0.5 * ws[q] * c * d / w * (ws_pt - w0) * 2.0 * u;
    }
    Seed out;
    out.pm = (std::polar(1.0, -theta) * F).real() > 0;
    if (out.pm) {
        out.s = top;
        out.F = F;
    } else {
        out.s = sheets_from(m, ws_pt, -top.r);
        out.F = -F;
    }
    // Delta starts near zero: log y_j = log y_i + Log(y_j / y_i)
    out.s.lj = out.s.li + std::log(out.s.yj / out.s.yi);
    return out;
}

struct PairedCut {
    LogCut cut;
    double arrival;  // direction from the branch point toward the puncture
};

std::vector<PairedCut> pair_log_cuts(const QdeModel& m, const std::vector<BranchPoint>& bps) {
    std::vector<PairedCut> out;
    if (bps.empty()) return out;
    for (const Puncture& p : classify_punctures(m)) {
        if (p.kind != PunctureKind::logarithmic || p.location == Location::finite) continue;
        size_t best = 0;
        auto configured = std::find_if(m.log_cut_pairs.begin(), m.log_cut_pairs.end(),
                                       [&](const LogCutPairing& q) { return q.puncture == p.location; });
        for (size_t i = 1; i < bps.size(); ++i) {
            double di, db;
            if (configured != m.log_cut_pairs.end()) {
                di = std::abs(bps[i].position - configured->branch_point);
                db = std::abs(bps[best].position - configured->branch_point);
            } else if (p.location == Location::origin) {
                di = std::abs(bps[i].position);
                db = std::abs(bps[best].position);
            } else {
                di = -std::abs(bps[i].position);
                db = -std::abs(bps[best].position);
            }
            if (di < db) best = i;
        }
        cplx w0 = bps[best].position;
        double arrival = p.location == Location::origin ? std::arg(-w0) : std::arg(w0);
        out.push_back({{p.location, static_cast<int>(best), p.degree_k}, wrap_2pi(arrival)});
    }
    return out;
}

// The k-indices of the three rays in counterclockwise order from a reference direction.
std::array<int, 3> rays_from(const QdeModel& m, const BranchPoint& bp, double theta, double ref) {
    std::array<int, 3> ks{0, 1, 2};
    std::sort(ks.begin(), ks.end(), [&](int a, int b) {
        return wrap_2pi(ray_angle(m, bp, theta, a) - ref) < wrap_2pi(ray_angle(m, bp, theta, b) - ref);
    });
    return ks;
}

Trajectory primary_ray(const QdeModel& m, const std::vector<BranchPoint>& bps, double scale, double theta, int bpi,
                       int k, const Caps& caps) {
    const BranchPoint& bp = bps[bpi];
    double eps = seed_distance(bps, bpi, scale);
    Seed sd = seed_ray(m, bp, theta, ray_angle(m, bp, theta, k), eps);
    Tracer tr(m, theta, positions(bps), scale, caps);
    Trajectory t = tr.run(sd.s, sd.F, bpi, eps);
    t.points.insert(t.points.begin(), TrajectoryPoint{bp.position, sd.s.li, sd.s.li, 0.0, 0.0});
    t.source = SourceKind::branch_point;
    t.parent = bpi;
    bool pm = bp.signature != SignatureTag::mp;
    t.label = {pm ? 1 : -1, pm ? -1 : 1, 0};
    return t;
}

}  // namespace

void TrajectoryLabel::validate() const {
    if ((i != 1 && i != -1) || (j != 1 && j != -1)) throw std::invalid_argument("sheet labels must be +1 or -1");
    if (i == j && n == 0) throw std::invalid_argument("trivial label (i, i, 0)");
}

std::string to_string(const TrajectoryLabel& l) {
    std::string s = "(";
    s += l.i > 0 ? '+' : '-';
    s += l.j > 0 ? '+' : '-';
    return s + "," + std::to_string(l.n) + ")";
}

bool operator==(const TrajectoryLabel& a, const TrajectoryLabel& b) {
    return a.i == b.i && a.j == b.j && a.n == b.n;
}

std::string to_string(SourceKind k) {
    switch (k) {
        case SourceKind::branch_point: return "branch_point";
        case SourceKind::puncture: return "puncture";
        case SourceKind::intersection: return "intersection";
    }
    return "?";
}

double coordinate_scale(const std::vector<BranchPoint>& bps) {
    double s = 0;
    for (const auto& b : bps) s = std::max(s, std::abs(b.position));
    return s > 0 ? s : 1.0;
}

std::vector<BranchPoint> decorated_branch_points(const QdeModel& m, double theta, std::vector<LogCut>* cuts) {
    std::vector<BranchPoint> bps = branch_points(m);
    const double scale = coordinate_scale(bps);
    for (const PairedCut& pc : pair_log_cuts(m, bps)) {
        bps[pc.cut.branch_point].enc_log_shift += -pc.cut.degree_k;
        if (cuts) cuts->push_back(pc.cut);
    }
    for (size_t i = 0; i < bps.size(); ++i) {
        BranchPoint& bp = bps[i];
        // the first ray counterclockwise from the principal cut sees the sheets of the displaced-cut convention
        int k = rays_from(m, bp, theta, principal_cut_angle(m, bp))[0];
        Seed sd = seed_ray(m, bp, theta, ray_angle(m, bp, theta, k), seed_distance(bps, i, scale));
        bp.signature = sd.pm ? SignatureTag::pm : SignatureTag::mp;
    }
    return bps;
}

std::vector<Trajectory> primary_lines(const QdeModel& m, double theta, int bp_index, const Caps& caps) {
    std::vector<BranchPoint> bps = decorated_branch_points(m, theta);
    const double scale = coordinate_scale(bps);
    if (bp_index < 0 || bp_index >= static_cast<int>(bps.size())) throw std::out_of_range("branch point index");
    const BranchPoint& bp = bps[bp_index];
    auto cuts = pair_log_cuts(m, bps);
    double ref = 0;
    for (const auto& pc : cuts)
        if (pc.cut.branch_point == bp_index) ref = pc.arrival;
    std::array<int, 3> ks = rays_from(m, bp, theta, ref);
    std::vector<Trajectory> out;
    for (int r = 0; r < 3; ++r) {
        Trajectory t = primary_ray(m, bps, scale, theta, bp_index, ks[r], caps);
        t.ray = r;
        t.ell = bp.enc_log_shift == 0 ? 0 : (r == 1 ? bp.enc_log_shift : -bp.enc_log_shift);
        out.push_back(std::move(t));
    }
    return out;
}

Trajectory trace_line(const QdeModel& m, double theta, cplx start, int i, int j, long n_i, long n_j, const Caps& caps) {
    TrajectoryLabel label{i, j, n_j - n_i};
    label.validate();
    std::vector<BranchPoint> bps = branch_points(m);
    const double scale = coordinate_scale(bps);
    Tracer tr(m, theta, positions(bps), scale, caps);
    tr.diag = i == j;
    tr.lift = n_j - n_i;
    Sheets s{start, 0, 0, 0, 0, 0};
    if (!tr.diag) {
        cplx t = m.t0(start);
        cplx r = principal_sqrt(t * t - 1.0);
        s = sheets_from(m, start, i > 0 ? r : -r);
    }
    Trajectory out = tr.run(s, 0.0, -1, 1e-3 * scale);
    out.label = label;
    out.lift = tr.lift;
    out.source = SourceKind::puncture;
    return out;
}

// ---- graph ----

namespace {

struct Hit {
    int a, b;
    size_t seg_a, seg_b;
    double ua, ub;  // fractions along the segments
    cplx w;
};

std::optional<std::pair<double, double>> segment_cross(cplx p0, cplx p1, cplx q0, cplx q1) {
    cplx d1 = p1 - p0, d2 = q1 - q0, e = q0 - p0;
    double den = d1.real() * d2.imag() - d1.imag() * d2.real();
    if (std::abs(den) < 1e-300) return std::nullopt;
    double u = (e.real() * d2.imag() - e.imag() * d2.real()) / den;
    double v = (e.real() * d1.imag() - e.imag() * d1.real()) / den;
    if (u < 0 || u >= 1 || v < 0 || v >= 1) return std::nullopt;
    return std::make_pair(u, v);
}

std::vector<Hit> crossings(const Trajectory& A, const Trajectory& B, double scale) {
    std::vector<Hit> out;
    const auto& P = A.points;
    const auto& Q = B.points;
    if (P.size() < 2 || Q.size() < 2) return out;
    // sort B's segments by min real part and sweep over A's segments
    struct Box {
        double x0, x1, y0, y1;
        size_t idx;
    };
    std::vector<Box> boxes;
    for (size_t q = 0; q + 1 < Q.size(); ++q) {
        cplx a = Q[q].w, b = Q[q + 1].w;
        boxes.push_back({std::min(a.real(), b.real()), std::max(a.real(), b.real()), std::min(a.imag(), b.imag()),
                         std::max(a.imag(), b.imag()), q});
    }
    std::sort(boxes.begin(), boxes.end(), [](const Box& l, const Box& r) { return l.x0 < r.x0 || (l.x0 == r.x0 && l.idx < r.idx); });
    double widest = 0;
    for (const auto& b : boxes) widest = std::max(widest, b.x1 - b.x0);
    const double near = 1e-7 * scale;
    for (size_t p = 0; p + 1 < P.size(); ++p) {
        cplx a = P[p].w, b = P[p + 1].w;
        double x0 = std::min(a.real(), b.real()), x1 = std::max(a.real(), b.real());
        double y0 = std::min(a.imag(), b.imag()), y1 = std::max(a.imag(), b.imag());
        auto it = std::lower_bound(boxes.begin(), boxes.end(), x0 - widest,
                                   [](const Box& bx, double v) { return bx.x0 < v; });
        for (; it != boxes.end() && it->x0 <= x1; ++it) {
            if (it->x1 < x0 || it->y1 < y0 || it->y0 > y1) continue;
            auto uv = segment_cross(a, b, Q[it->idx].w, Q[it->idx + 1].w);
            if (!uv) continue;
            cplx w = a + uv->first * (b - a);
            // common sources (shared branch point, birth on a parent) are not intersections
            if (std::abs(w - P.front().w) < near || std::abs(w - Q.front().w) < near) continue;
            out.push_back({A.id, B.id, p, it->idx, uv->first, uv->second, w});
        }
    }
    return out;
}

struct Spawn {
    Sheets s;
    long lift;
    bool diag;
    TrajectoryLabel label;
    int generation;
    int intersection;
};

// Tracked data of trajectory T continued to the crossing point.
std::optional<Sheets> sheets_at_crossing(const QdeModel& m, const Trajectory& T, size_t seg, cplx w) {
    Sheets s = sheets_from_point(T.points[seg]);
    if (std::abs(s.r) < 1e-12) s = sheets_from_point(T.points[seg + 1]);
    return continue_to(m, s, w);
}

std::vector<Trajectory> trace_all(const std::vector<std::function<Trajectory()>>& jobs, bool parallel) {
    std::vector<Trajectory> out(jobs.size());
    const long n = static_cast<long>(jobs.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long q = 0; q < n; ++q) out[q] = jobs[q]();
    } else {
        for (long q = 0; q < n; ++q) out[q] = jobs[q]();
    }
    return out;
}

}  // namespace

std::vector<TrajectoryLabel> spawn_rule(const TrajectoryLabel& a, const TrajectoryLabel& b, const Caps& caps) {
    std::vector<TrajectoryLabel> out;
    auto keep = [&](TrajectoryLabel l) {
        if (std::abs(l.n) <= caps.max_abs_n && !(l.diagonal() && l.n == 0)) out.push_back(l);
    };
    if (a.diagonal() && b.diagonal()) return out;
    if (a.diagonal()) return spawn_rule(b, a, caps);
    if (b.diagonal()) {
        for (long k = 1; k <= caps.max_generation; ++k) keep({a.i, a.j, a.n + k * b.n});
        return out;
    }
    if (a.i == b.i) return out;  // same type
    const long N = a.n + b.n;
    if (N == 0) return out;
    for (long k = 1; k <= caps.max_generation; ++k) {
        keep({a.i, a.j, a.n + k * N});
        keep({b.i, b.j, b.n + k * N});
    }
    for (long k = 0; k < caps.max_generation; ++k) keep({a.i, a.i, (k + 1) * N});
    return out;
}

StokesGraph build_graph(const QdeModel& m, double theta, const Caps& caps, bool parallel) {
    StokesGraph g;
    g.model = m.name;
    g.cover_degree = m.cover_degree;
    g.theta = theta;
    g.branch_points = decorated_branch_points(m, theta, &g.log_cuts);
    g.scale = coordinate_scale(g.branch_points);
    g.notes.push_back("mass and lift of spawned lines are anchored to the incoming pair with minimal |n|");
    const double scale = g.scale;
    const auto& bps = g.branch_points;
    const auto paired = pair_log_cuts(m, bps);

    // generation 0: primary lines, then the spiral families of each log cut
    std::vector<std::function<Trajectory()>> jobs;
    std::vector<std::pair<int, int>> primary_meta;  // (branch point, ray)
    for (size_t b = 0; b < bps.size(); ++b) {
        double ref = 0;
        for (const auto& pc : paired)
            if (pc.cut.branch_point == static_cast<int>(b)) ref = pc.arrival;
        std::array<int, 3> ks = rays_from(m, bps[b], theta, ref);
        for (int r = 0; r < 3; ++r) {
            int bi = static_cast<int>(b), k = ks[r];
            jobs.push_back([&, bi, k] { return primary_ray(m, bps, scale, theta, bi, k, caps); });
            primary_meta.push_back({bi, r});
        }
    }
    struct SpiralMeta {
        int cut;
        long n;
        int sheet;
    };
    std::vector<SpiralMeta> spiral_meta;
    if (caps.spirals) {
        for (size_t cidx = 0; cidx < paired.size(); ++cidx) {
            cplx w0 = bps[paired[cidx].cut.branch_point].position;
            for (long n = 1; n <= caps.max_abs_n; ++n) {
                // the two halves of the spiral through the paired branch point: outgoing (++, n), returning (--, -n)
                for (int sheet : {1, -1}) {
                    long lift = sheet > 0 ? n : -n;
                    jobs.push_back([&, w0, lift, sheet] {
                        return trace_line(m, theta, w0, sheet, sheet, 0, lift, caps);
                    });
                    spiral_meta.push_back({static_cast<int>(cidx), lift, sheet});
                }
            }
        }
    }
    std::vector<Trajectory> gen0 = trace_all(jobs, parallel);
    for (size_t q = 0; q < gen0.size(); ++q) {
        Trajectory& t = gen0[q];
        t.id = static_cast<int>(q);
        t.generation = 0;
        if (q < primary_meta.size()) {
            auto [b, r] = primary_meta[q];
            const BranchPoint& bp = bps[b];
            t.ray = r;
            t.ell = bp.enc_log_shift == 0 ? 0 : (r == 1 ? bp.enc_log_shift : -bp.enc_log_shift);
            g.sqrt_cuts.push_back({b, t.id, 0.05});
        } else {
            const SpiralMeta& sm = spiral_meta[q - primary_meta.size()];
            t.source = SourceKind::puncture;
            t.parent = sm.cut;
        }
        if (t.stop == "branch_point" && t.source == SourceKind::branch_point)
            g.warnings.push_back("phase is at a saddle: line " + std::to_string(t.id) + " ends on a branch point");
        g.trajectories.push_back(std::move(t));
    }

    // spawning, one generation at a time; registration order is (generation, parent id, arc position)
    for (int gen = 0; gen < caps.max_generation; ++gen) {
        std::vector<Hit> hits;
        const size_t n = g.trajectories.size();
        for (size_t a = 0; a < n; ++a)
            for (size_t b = a + 1; b < n; ++b) {
                const Trajectory& A = g.trajectories[a];
                const Trajectory& B = g.trajectories[b];
                if (std::max(A.generation, B.generation) != gen) continue;
                if (A.label.diagonal() && B.label.diagonal()) continue;
                auto h = crossings(A, B, scale);
                hits.insert(hits.end(), h.begin(), h.end());
            }
        std::sort(hits.begin(), hits.end(), [&](const Hit& l, const Hit& r) {
            const Trajectory& la = g.trajectories[l.a];
            const Trajectory& ra = g.trajectories[r.a];
            int lg = std::max(la.generation, g.trajectories[l.b].generation);
            int rg = std::max(ra.generation, g.trajectories[r.b].generation);
            if (lg != rg) return lg < rg;
            if (l.a != r.a) return l.a < r.a;
            if (l.seg_a != r.seg_a) return l.seg_a < r.seg_a;
            if (l.ua != r.ua) return l.ua < r.ua;
            return l.b < r.b;
        });
        std::vector<Spawn> spawns;
        for (const Hit& h : hits) {
            const Trajectory* A = &g.trajectories[h.a];
            const Trajectory* B = &g.trajectories[h.b];
            size_t seg_a = h.seg_a, seg_b = h.seg_b;
            if (A->label.diagonal()) {
                std::swap(A, B);
                std::swap(seg_a, seg_b);
            }
            auto sa = sheets_at_crossing(m, *A, seg_a, h.w);
            if (!sa) continue;
            const double two_pi = 2 * kPi;
            cplx da = sa->lj - sa->li + kI * two_pi * static_cast<double>(A->lift);
            std::vector<Spawn> local;
            const int child_gen = gen + 1;
            if (B->label.diagonal()) {
                TrajectoryLabel eb{B->label.i, B->label.i, B->lift};
                for (const TrajectoryLabel& c : spawn_rule(A->label, eb, caps))
                    local.push_back({*sa, A->lift + (c.n - A->label.n), false, c, child_gen, 0});
            } else {
                auto sb = sheets_at_crossing(m, *B, seg_b, h.w);
                if (!sb) continue;
                double tolr = 1e-6 * (1.0 + std::abs(sa->yi) + std::abs(sa->yj));
                bool opposite = std::abs(sa->yi - sb->yj) < tolr && std::abs(sa->yj - sb->yi) < tolr;
                if (!opposite) continue;  // same type: nothing is generated
                cplx db = sb->lj - sb->li + kI * two_pi * static_cast<double>(B->lift);
                long N = std::lround((da + db).imag() / two_pi);
                // the incoming pair as the rule table sees it: its shifts add up to the physical N
                TrajectoryLabel eb{A->label.j, A->label.i, N - A->label.n};
                for (const TrajectoryLabel& c : spawn_rule(A->label, eb, caps)) {
                    if (c.diagonal()) local.push_back({*sa, c.n, true, c, child_gen, 0});
                    else if (c.i == A->label.i) local.push_back({*sa, A->lift + (c.n - A->label.n), false, c, child_gen, 0});
                    else local.push_back({*sb, B->lift + (c.n - eb.n), false, c, child_gen, 0});
                }
            }
            if (local.empty()) continue;
            Intersection x;
            x.id = static_cast<int>(g.intersections.size());
            x.w = h.w;
            x.a = std::min(h.a, h.b);
            x.b = std::max(h.a, h.b);
            x.label_a = g.trajectories[x.a].label;
            x.label_b = g.trajectories[x.b].label;
            for (Spawn& sp : local) sp.intersection = x.id;
            g.intersections.push_back(x);
            spawns.insert(spawns.end(), local.begin(), local.end());
        }
        if (spawns.empty()) break;
        std::vector<std::function<Trajectory()>> sjobs;
        for (const Spawn& sp : spawns)
            sjobs.push_back([&, sp] {
                Tracer tr(m, theta, positions(bps), scale, caps);
                tr.diag = sp.diag;
                tr.lift = sp.lift;
                return tr.run(sp.s, 0.0, -1, bps.empty() ? 1e-3 * scale : seed_distance(bps, 0, scale));
            });
        std::vector<Trajectory> born = trace_all(sjobs, parallel);
        for (size_t q = 0; q < born.size(); ++q) {
            Trajectory& t = born[q];
            t.id = static_cast<int>(g.trajectories.size());
            t.label = spawns[q].label;
            t.lift = spawns[q].lift;
            t.source = SourceKind::intersection;
            t.parent = spawns[q].intersection;
            t.generation = spawns[q].generation;
            g.intersections[t.parent].spawned.push_back(t.id);
            g.trajectories.push_back(std::move(t));
        }
    }
    return g;
}

// ---- saddles ----

namespace {

// A line counts as leaving its own branch point once it is this fraction of the scale away.
constexpr double kNear = 0.3;

struct Approach {
    double miss = 0;   // signed distance: positive when the target lies to the left of the line
    double dist = 0;
    double g = 0;      // Im[e^{-i theta} Z], Z = F at the closest vertex plus the straight closing integral
    bool valid = false;
};

// Closest approach of t to target; valid when the closing segment meets the target on the same log branch.
Approach closest_approach(const QdeModel& m, const Trajectory& t, cplx target, bool own_source, double scale,
                          double theta, const std::vector<cplx>& singular) {
    static const double xs[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                 0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double ws[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066661229514, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066661229514, 0.2223810344533745, 0.1012285362903763};
    Approach best;
    const auto& P = t.points;
    size_t first = 0;
    if (own_source) {
        // skip the departure; the line must first get well away from its own branch point
        while (first < P.size() && std::abs(P[first].w - target) < kNear * scale) ++first;
        if (first >= P.size()) return best;
    }
    // the closest return is the nearest local minimum of the distance; the departure itself never is one
    double bd = INFINITY;
    size_t vq = 0;
    for (size_t q = first + 1; q + 1 < P.size(); ++q) {
        double d = std::abs(P[q].w - target);
        if (d <= std::abs(P[q - 1].w - target) && d <= std::abs(P[q + 1].w - target) && d < bd) {
            bd = d;
            vq = q;
        }
    }
    if (P.size() >= 2 && first + 1 < P.size() && std::abs(P.back().w - target) < bd) {
        bd = std::abs(P.back().w - target);
        vq = P.size() - 1;
    }
    if (!std::isfinite(bd)) return best;
    {
        cplx d = vq + 1 < P.size() ? P[vq + 1].w - P[vq - 1].w : P[vq].w - P[vq - 1].w;
        if (d == cplx(0)) d = 1;
        best.dist = bd;
        best.miss = (std::conj(d) * (target - P[vq].w)).imag() >= 0 ? bd : -bd;
    }
    // the straight closing segment must stay clear of every other singular point
    const cplx p = P[vq].w;
    const double len = std::abs(p - target);
    for (cplx sgl : singular) {
        if (std::abs(sgl - target) < 1e-12 * scale) continue;
        double u = len > 0 ? std::clamp(((sgl - target) * std::conj(p - target)).real() / (len * len), 0.0, 1.0) : 0.0;
        if (std::abs(sgl - (target + u * (p - target))) < 0.2 * len) return best;
    }
    const double c = m.cover_degree;
    const cplx lift = 2.0 * kPi * kI * static_cast<double>(t.lift);
    Sheets cur = sheets_from_point(P[vq]);
    cplx F = 0, d_end = 0;
    for (int q = 7; q >= 0; --q) {
        double u = 0.5 * (xs[q] + 1.0);
        auto nx = continue_to(m, cur, target + (p - target) * u * u);
        if (!nx) return best;
        cur = *nx;
        d_end = cur.lj - cur.li + lift;
        F += 0.5 * ws[q] * c * d_end / cur.w * (p - target) * 2.0 * u;
    }
    // Delta vanishes at the target only on the closing branch; other branches sit at 2 pi i k
    if (std::abs(d_end) > 1.0) return best;
    cplx Fp = std::polar(1.0, theta) * cplx(P[vq].mass, P[vq].im_f);
    best.g = (std::polar(1.0, -theta) * (Fp - F)).imag();
    best.valid = true;
    return best;
}

struct SweepLine {
    int from, k, to;
};

}  // namespace

std::vector<Saddle> find_saddles(const QdeModel& m, double a, double b, int steps, const Caps& caps, bool parallel) {
    if (!(std::isfinite(a) && std::isfinite(b)) || b < a) throw std::invalid_argument("phase range must be finite");
    if (steps < 1) throw std::invalid_argument("steps must be positive");
    std::vector<BranchPoint> bps = branch_points(m);
    for (auto& bp : bps) bp.signature = SignatureTag::pm;
    const double scale = coordinate_scale(bps);
    std::vector<cplx> singular = positions(bps);
    singular.push_back(0.0);
    std::vector<SweepLine> lines;
    for (int f = 0; f < static_cast<int>(bps.size()); ++f)
        for (int k = 0; k < 3; ++k)
            for (int t = 0; t < static_cast<int>(bps.size()); ++t) lines.push_back({f, k, t});
    auto approach_at = [&](double th, const SweepLine& sl) {
        Trajectory t = primary_ray(m, bps, scale, th, sl.from, sl.k, caps);
        return closest_approach(m, t, bps[sl.to].position, sl.from == sl.to, scale, th, singular);
    };

    // one row per grid phase; rays keep their k-index so they move continuously with theta
    std::vector<std::vector<Approach>> grid(steps + 1, std::vector<Approach>(lines.size()));
    auto row = [&](long q) {
        double th = a + (b - a) * static_cast<double>(q) / steps;
        for (int f = 0; f < static_cast<int>(bps.size()); ++f)
            for (int k = 0; k < 3; ++k) {
                Trajectory t = primary_ray(m, bps, scale, th, f, k, caps);
                for (int to = 0; to < static_cast<int>(bps.size()); ++to) {
                    size_t idx = (static_cast<size_t>(f) * 3 + k) * bps.size() + to;
                    grid[q][idx] = closest_approach(m, t, bps[to].position, f == to, scale, th, singular);
                }
            }
    };
    const long rows = steps + 1;
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long q = 0; q < rows; ++q) row(q);
    } else {
        for (long q = 0; q < rows; ++q) row(q);
    }

    // sign changes of g bracket a saddle; bisection on g, then the line itself must reach the target
    std::vector<std::vector<Saddle>> per_line(lines.size());
    auto scan_line = [&](long li) {
        const SweepLine& sl = lines[li];
        for (int q = 0; q < steps; ++q) {
            const Approach& l = grid[q][li];
            const Approach& r = grid[q + 1][li];
            if (!l.valid || !r.valid) continue;
            if ((l.g > 0) == (r.g > 0) && l.g != 0 && r.g != 0) continue;
            double lo = a + (b - a) * q / steps, hi = a + (b - a) * (q + 1.0) / steps, glo = l.g;
            Approach mid = std::abs(l.g) < std::abs(r.g) ? l : r;
            bool ok = true;
            for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
                double th = 0.5 * (lo + hi);
                mid = approach_at(th, sl);
                if (!mid.valid) {
                    ok = false;
                    break;
                }
                if ((mid.g > 0) == (glo > 0)) {
                    lo = th;
                    glo = mid.g;
                } else {
                    hi = th;
                }
            }
            double th = 0.5 * (lo + hi);
            if (ok) mid = approach_at(th, sl);
            if (!ok || !mid.valid || mid.dist > 1e-2 * scale) continue;
            per_line[li].push_back({th, sl.from, sl.to, sl.k, mid.miss});
        }
    };
    const long nl = static_cast<long>(lines.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long li = 0; li < nl; ++li) scan_line(li);
    } else {
        for (long li = 0; li < nl; ++li) scan_line(li);
    }
    std::vector<Saddle> found;
    for (const auto& v : per_line) found.insert(found.end(), v.begin(), v.end());
    std::sort(found.begin(), found.end(), [](const Saddle& l, const Saddle& r) {
        if (l.theta != r.theta) return l.theta < r.theta;
        if (l.from != r.from) return l.from < r.from;
        if (l.to != r.to) return l.to < r.to;
        return l.ray < r.ray;
    });
    std::vector<Saddle> out;
    for (const Saddle& s : found) {
        bool dup = std::any_of(out.begin(), out.end(), [&](const Saddle& o) {
            return std::abs(o.theta - s.theta) < 1e-4 &&
                   ((o.from == s.from && o.to == s.to) || (o.from == s.to && o.to == s.from));
        });
        if (!dup) out.push_back(s);
    }
    return out;
}

double d0_circle_deviation(const QdeModel& m, cplx w0, long n, double theta) {
    if (n == 0) throw std::invalid_argument("n must be nonzero");
    Caps caps;
    // one turn in x costs 4 pi^2 |n| of mass; a turn in w is c turns in x
    caps.max_mass = 4.0 * kPi * kPi * std::abs(n) * m.cover_degree;
    caps.max_radius = 1e6;
    Trajectory t = trace_line(m, theta, w0, 1, 1, 0, n, caps);
    double dev = 0, r0 = std::abs(w0);
    for (const auto& p : t.points) dev = std::max(dev, std::abs(std::abs(p.w) / r0 - 1.0));
    return dev;
}

}  // namespace qwkb
