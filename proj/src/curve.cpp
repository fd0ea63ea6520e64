#include "qwkb/curve.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace qwkb {

// ---- Laurent ----

Laurent::Laurent(std::map<long, QI> terms) {
    for (auto& [e, v] : terms)
        if (!v.is_zero()) c.emplace(e, std::move(v));
}

Laurent Laurent::monomial(long e, const QI& coef) { return Laurent({{e, coef}}); }

long Laurent::min_exp() const { return c.empty() ? 0 : c.begin()->first; }
long Laurent::max_exp() const { return c.empty() ? 0 : c.rbegin()->first; }

QI Laurent::coeff(long e) const {
    auto it = c.find(e);
    return it == c.end() ? QI(0) : it->second;
}

cplx Laurent::eval(cplx w) const {
    cplx s = 0;
    for (const auto& [e, v] : c) s += v.to_cplx() * std::pow(w, static_cast<int>(e));
    return s;
}

Laurent Laurent::w_deriv() const {
    Laurent out;
    for (const auto& [e, v] : c)
        if (e != 0) out.c.emplace(e, v * QI(e));
    return out;
}

Laurent& Laurent::operator+=(const Laurent& o) {
    for (const auto& [e, v] : o.c) {
        QI s = coeff(e) + v;
        if (s.is_zero()) c.erase(e);
        else c[e] = s;
    }
    return *this;
}

Laurent& Laurent::operator-=(const Laurent& o) { return *this += o * QI(-1); }

Laurent Laurent::operator*(const Laurent& o) const {
    std::map<long, QI> acc;
    for (const auto& [a, va] : c)
        for (const auto& [b, vb] : o.c) acc[a + b] += va * vb;
    return Laurent(std::move(acc));
}

Laurent Laurent::operator*(const QI& s) const {
    std::map<long, QI> acc;
    for (const auto& [e, v] : c) acc[e] = v * s;
    return Laurent(std::move(acc));
}

std::string to_string(const Laurent& p, const std::string& var) {
    if (p.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, v] : p.c) {
        std::string cs = to_string(v);
        bool compound = sgn(v.re) != 0 && sgn(v.im) != 0;
        if (!first) os << " + ";
        first = false;
        if (compound) cs = "(" + cs + ")";
        if (e == 0) {
            os << cs;
            continue;
        }
        if (!v.is_one()) os << cs << "*";
        os << var;
        if (e != 1) os << "^" << (e < 0 ? "(" + std::to_string(e) + ")" : std::to_string(e));
    }
    return os.str();
}

std::string to_string(Location l) {
    switch (l) {
        case Location::origin: return "origin";
        case Location::infinity: return "infinity";
        case Location::finite: return "finite";
    }
    return "?";
}

// ---- QdeModel ----

cplx QdeModel::x_of(cplx w) const { return cover_degree == 1 ? w : std::pow(w, cover_degree); }

cplx QdeModel::w_of(cplx x) const {
    return cover_degree == 1 ? x : std::pow(x, 1.0 / cover_degree);
}

cplx QdeModel::dt0_dx(cplx w) const {
    cplx dt_dw = T0().w_deriv().eval(w) / w;
    cplx dx_dw = static_cast<double>(cover_degree) * std::pow(w, cover_degree - 1);
    return dt_dw / dx_dw;
}

void QdeModel::validate() const {
    if (cover_degree != 1 && cover_degree != 2)
        throw std::invalid_argument("cover_degree must be 1 or 2");
    if (T.empty()) throw std::invalid_argument("model has no trace coefficients");
    if (T0().is_constant()) throw std::invalid_argument("T0 is constant: the WKB curve has no branch points");
}

// ---- sheets ----

std::pair<cplx, cplx> sheets_at(const QdeModel& m, cplx w, int branch_choice) {
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
        throw LogPunctureHit("evaluation at infinity");
    if (std::abs(w) == 0.0) {
        if (m.T0().min_exp() < 0) throw LogPunctureHit("T0 has a pole at w = 0");
        w = 0.0;
    }
    cplx t = std::abs(w) == 0.0 ? m.T0().coeff(0).to_cplx() : m.t0(w);
    cplx disc = t * t - 1.0;
    if (std::abs(disc) < 1e-14 * std::max(1.0, std::norm(t)))
        throw DegenerateSheets("branch point: T0^2 = 1");
    cplx r = principal_sqrt(disc);
    cplx yp = t + r, ym = t - r;
    if (branch_choice < 0) std::swap(yp, ym);
    return {yp, ym};
}

std::string to_string(SignatureTag s) {
    switch (s) {
        case SignatureTag::pm: return "+-";
        case SignatureTag::mp: return "-+";
        case SignatureTag::unknown: return "?";
    }
    return "?";
}

// ---- branch points ----

std::vector<BranchPoint> branch_points(const QdeModel& m) {
    m.validate();
    Laurent f = m.T0() * m.T0() - Laurent::monomial(0);
    long lo = f.min_exp(), deg = f.max_exp() - lo;
    std::vector<cplx> poly(static_cast<size_t>(deg) + 1);
    for (const auto& [e, v] : f.c) poly[static_cast<size_t>(e - lo)] = v.to_cplx();
    std::vector<cplx> roots;
    if (deg >= 1) {
        Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
        for (long r = 1; r < deg; ++r) comp(r, r - 1) = 1.0;
        for (long r = 0; r < deg; ++r) comp(r, deg - 1) = -poly[static_cast<size_t>(r)] / poly[static_cast<size_t>(deg)];
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
        for (long k = 0; k < deg; ++k) roots.push_back(es.eigenvalues()(k));
    }
    Laurent df = f.w_deriv();
    for (cplx& w : roots) {
        for (int it = 0; it < 60; ++it) {
            cplx fw = f.eval(w), dw = df.eval(w) / w;
            if (std::abs(dw) == 0.0) break;
            cplx step = fw / dw;
            w -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(w))) break;
        }
    }
    for (size_t a = 0; a < roots.size(); ++a)
        for (size_t b = a + 1; b < roots.size(); ++b)
            if (std::abs(roots[a] - roots[b]) < 1e-6 * std::max(1.0, std::abs(roots[a])))
                throw NonSimpleBranchPoint("T0^2 - 1 has a repeated root near w = " +
                                           std::to_string(roots[a].real()) + (roots[a].imag() < 0 ? "" : "+") +
                                           std::to_string(roots[a].imag()) + "i");
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (std::abs(a.real() - b.real()) > 1e-12) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    std::vector<BranchPoint> out;
    for (cplx w : roots) {
        if (std::abs(f.eval(w)) > 1e-13 * std::max(1.0, std::abs(w)))
            throw NonSimpleBranchPoint("Newton polishing failed to reach 1e-13");
        BranchPoint bp;
        bp.position = w;
        bp.sign_class = m.t0(w).real() > 0 ? 1 : -1;
        bp.c0 = std::sqrt(2.0 * bp.sign_class * m.dt0_dx(w));
        if (std::abs(bp.c0) == 0.0) throw NonSimpleBranchPoint("c0 vanishes");
        out.push_back(bp);
    }
    return out;
}

// ---- punctures ----

std::string to_string(PunctureKind k) {
    switch (k) {
        case PunctureKind::logarithmic: return "logarithmic";
        case PunctureKind::regular: return "regular";
        case PunctureKind::apparent: return "apparent";
        case PunctureKind::colliding: return "colliding";
    }
    return "?";
}

static Puncture classify_end(const QdeModel& m, Location loc) {
    Puncture p;
    p.location = loc;
    p.x_star = loc == Location::origin ? cplx(0) : cplx(INFINITY, 0);
    const Laurent& t0 = m.T0();
    // local degree of T0 in u = w (origin) or u = 1/w (infinity)
    long lead = loc == Location::origin ? t0.min_exp() : -t0.max_exp();
    if (lead < 0) {
        p.kind = PunctureKind::logarithmic;
        p.degree_k = lead;
        p.limit_values = {cplx(INFINITY, 0), cplx(0)};
        return p;
    }
    cplx t = t0.coeff(0).to_cplx();
    p.degree_k = 0;
    if (std::abs(t * t - 1.0) < 1e-14) {
        p.kind = PunctureKind::colliding;
        p.mu = t.real() > 0 ? cplx(0) : cplx(0, M_PI);
        p.limit_values = {t, t};
        return p;
    }
    cplx yp = t + principal_sqrt(t * t - 1.0);
    p.kind = PunctureKind::regular;
    p.mu = std::log(yp);
    p.limit_values = {yp, 1.0 / yp};
    return p;
}

std::vector<Puncture> classify_punctures(const QdeModel& m) {
    m.validate();
    // Laurent data has no finite poles, so the classification covers 0 and infinity
    return {classify_end(m, Location::origin), classify_end(m, Location::infinity)};
}

cplx qpochhammer(cplx x, cplx q, int terms) {
    if (std::abs(q) >= 1.0) throw DivergentProduct("q-Pochhammer needs |q| < 1");
    if (terms < 1) throw std::invalid_argument("q-Pochhammer needs at least one factor");
    cplx acc = 1.0, qk = 1.0;
    for (int k = 0; k < terms; ++k) {
        acc *= 1.0 - x * qk;
        qk *= q;
    }
    return acc;
}

}  // namespace qwkb
