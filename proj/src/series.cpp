#include "qwkb/series.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <type_traits>

namespace qwkb {

std::string scalar_string(const cplx& z) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.17g%+.17g*i)", z.real(), z.imag());
    return buf;
}

template <class K>
std::string to_string(const Poly<K>& p, const std::string& var) {
    if (p.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, v] : p.c) {
        if (!first) os << " + ";
        first = false;
        std::string cs = scalar_string(v);
        if (cs.find_first_of("+-", 1) != std::string::npos && cs.front() != '(') cs = "(" + cs + ")";
        os << cs;
        if (e != 0) os << "*" << var << (e == 1 ? "" : "^" + (e < 0 ? "(" + std::to_string(e) + ")" : std::to_string(e)));
    }
    return os.str();
}

template std::string to_string(const Poly<QI>&, const std::string&);
template std::string to_string(const Poly<cplx>&, const std::string&);

// ---- ring ----

template <class K>
SeriesRing<K>::SeriesRing(const QdeModel& m) : cover_(m.cover_degree) {
    m.validate();
    T0_ = Poly<K>::from(m.T0());
    one_.c.emplace(0, scalar_from<K>(QI(1)));
    D_ = T0_ * T0_ - one_;
    dD_ = D_.w_deriv().scaled(scalar_from<K>(QI(Rat(1, cover_))));
}

template <class K>
bool SeriesRing<K>::exact() const {
    return std::is_same_v<K, QI>;
}

template <class K>
Poly<K> SeriesRing<K>::lift(const Poly<K>& p, int k) const {
    Poly<K> out = p;
    for (int j = 0; j < k; ++j) out = out * D_;
    return out;
}

template <class K>
RExpr<K> SeriesRing<K>::constant(const K& v) const {
    return {one_.scaled(v), {}, 0};
}

template <class K>
RExpr<K> SeriesRing<K>::normalize(RExpr<K> a) const {
    if (a.is_zero()) return {};
    if (!exact()) return a;
    while (a.e > 0) {
        auto qa = a.A.div_exact(D_);
        if (!qa) break;
        auto qb = a.B.div_exact(D_);
        if (!qb) break;
        a.A = std::move(*qa);
        a.B = std::move(*qb);
        --a.e;
    }
    return a;
}

template <class K>
RExpr<K> SeriesRing<K>::add(const RExpr<K>& a, const RExpr<K>& b) const {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    int e = std::max(a.e, b.e);
    RExpr<K> out{lift(a.A, e - a.e) + lift(b.A, e - b.e), lift(a.B, e - a.e) + lift(b.B, e - b.e), e};
    return normalize(std::move(out));
}

template <class K>
RExpr<K> SeriesRing<K>::sub(const RExpr<K>& a, const RExpr<K>& b) const {
    return add(a, scale(b, scalar_from<K>(QI(-1))));
}

template <class K>
RExpr<K> SeriesRing<K>::scale(const RExpr<K>& a, const K& s) const {
    return {a.A.scaled(s), a.B.scaled(s), scalar_is_zero(s) ? 0 : a.e};
}

template <class K>
RExpr<K> SeriesRing<K>::mul(const RExpr<K>& a, const RExpr<K>& b) const {
    if (a.is_zero() || b.is_zero()) return {};
    RExpr<K> out{a.A * b.A + a.B * b.B * D_, a.A * b.B + a.B * b.A, a.e + b.e};
    return normalize(std::move(out));
}

template <class K>
RExpr<K> SeriesRing<K>::dlog(const RExpr<K>& a) const {
    if (a.is_zero()) return {};
    const K inv_c = scalar_from<K>(QI(Rat(1, cover_)));
    const K half = scalar_from<K>(QI(Rat(1, 2)));
    const K ek = scalar_from<K>(QI(a.e));
    Poly<K> dA = a.A.w_deriv().scaled(inv_c), dB = a.B.w_deriv().scaled(inv_c);
    // d[(A + B r) D^-e] = [D dA - e dD A + (D dB + dD B/2 - e dD B) r] / D^(e+1)
    RExpr<K> out{D_ * dA - (dD_ * a.A).scaled(ek), D_ * dB + (dD_ * a.B).scaled(half) - (dD_ * a.B).scaled(ek),
                 a.e + 1};
    return normalize(std::move(out));
}

template <class K>
RExpr<K> SeriesRing<K>::over_r(const RExpr<K>& a) const {
    if (a.is_zero()) return {};
    return normalize({a.B * D_, a.A, a.e + 1});
}

template <class K>
cplx SeriesRing<K>::eval(const RExpr<K>& a, cplx w, cplx r) const {
    cplx num = a.A.eval(w) + a.B.eval(w) * r;
    return a.e == 0 ? num : num / std::pow(D_.eval(w), a.e);
}

template <class K>
std::string SeriesRing<K>::str(const RExpr<K>& a) const {
    std::string var = cover_ == 1 ? "x" : "w";
    std::ostringstream os;
    os << "(" << to_string(a.A, var) << ") + (" << to_string(a.B, var) << ")*r";
    if (a.e) os << " over D^" << a.e;
    return os.str();
}

template class SeriesRing<QI>;
template class SeriesRing<cplx>;

// ---- recursions ----

namespace {

template <class K>
K rat(long p, long q = 1) {
    return scalar_from<K>(QI(Rat(p, q)));
}

Rat factorial(long n) {
    Rat f(1);
    for (long j = 2; j <= n; ++j) f *= j;
    return f;
}

template <class K>
K inv_factorial(long n) {
    return scalar_from<K>(QI(Rat(1) / factorial(n)));
}

}  // namespace

template <class K>
RiccatiSeries<K> riccati_coeffs(const SeriesRing<K>& ring, const QdeModel& m, int sign, int N) {
    if (N < 0) throw std::invalid_argument("series order must be >= 0");
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    RiccatiSeries<K> s;
    s.sign = sign;
    s.order = N;
    for (int k = 0; k <= N; ++k) s.T.push_back(ring.poly(Poly<K>::from(m.Tk(static_cast<size_t>(k)))));
    const K ks = rat<K>(sign);
    RExpr<K> R0 = ring.add(s.T[0], ring.scale(ring.r(), ks));
    s.coeffs.push_back(R0);
    // derivs[j][l] = d^l R_j
    std::vector<std::vector<RExpr<K>>> derivs{{R0}};
    auto deriv = [&](int j, int l) -> const RExpr<K>& {
        auto& row = derivs[static_cast<size_t>(j)];
        while (static_cast<int>(row.size()) <= l) row.push_back(ring.dlog(row.back()));
        return row[static_cast<size_t>(l)];
    };
    std::vector<RExpr<K>> Rt{R0};  // R~_b = R(q^-1 x) coefficients
    for (int n = 1; n <= N; ++n) {
        RExpr<K> partial;  // R~_n without its l = 0 term
        for (int l = 1; l <= n; ++l)
            partial = ring.add(partial, ring.scale(deriv(n - l, l), rat<K>(l % 2 ? -1 : 1) * inv_factorial<K>(l)));
        RExpr<K> rest = ring.mul(ring.sub(R0, ring.scale(s.T[0], rat<K>(2))), partial);
        for (int a = 1; a < n; ++a) rest = ring.add(rest, ring.mul(s.coeffs[static_cast<size_t>(a)], Rt[static_cast<size_t>(n - a)]));
        for (int k = 1; k <= n; ++k)
            rest = ring.sub(rest, ring.scale(ring.mul(s.T[static_cast<size_t>(k)], Rt[static_cast<size_t>(n - k)]), rat<K>(2)));
        // the R_n coefficient is 2 R0 - 2 T0 = 2 sign r
        RExpr<K> Rn = ring.scale(ring.over_r(rest), rat<K>(-sign, 2));
        s.coeffs.push_back(Rn);
        derivs.push_back({Rn});
        Rt.push_back(ring.add(partial, Rn));
    }
    return s;
}

template <class K>
static std::vector<RExpr<K>> ratios(const SeriesRing<K>& ring, const RiccatiSeries<K>& s) {
    // 1/R0 = T0 - sign r
    RExpr<K> inv0 = ring.sub(s.T[0], ring.scale(ring.r(), rat<K>(s.sign)));
    std::vector<RExpr<K>> u(static_cast<size_t>(s.order) + 1);
    for (int k = 1; k <= s.order; ++k) u[static_cast<size_t>(k)] = ring.mul(s.coeffs[static_cast<size_t>(k)], inv0);
    return u;
}

template <class K>
std::vector<RExpr<K>> log_r_coeffs(const SeriesRing<K>& ring, const RiccatiSeries<K>& s) {
    if (s.order < 1) throw std::invalid_argument("log R coefficients need order >= 1");
    auto u = ratios(ring, s);
    const int N = s.order;
    // lower Hessenberg with unit superdiagonal: H(k,1) = k u_k, H(k,j) = u_{k-j+1}
    auto H = [&](int k, int j) { return j == 1 ? ring.scale(u[static_cast<size_t>(k)], rat<K>(k)) : u[static_cast<size_t>(k - j + 1)]; };
    std::vector<RExpr<K>> det{ring.constant(rat<K>(1))};
    std::vector<RExpr<K>> D;
    for (int k = 1; k <= N; ++k) {
        RExpr<K> acc;
        for (int j = 1; j <= k; ++j)
            acc = ring.add(acc, ring.scale(ring.mul(H(k, j), det[static_cast<size_t>(j - 1)]), rat<K>((k - j) % 2 ? -1 : 1)));
        det.push_back(acc);
        D.push_back(ring.scale(acc, rat<K>((k - 1) % 2 ? -1 : 1, k)));
    }
    return D;
}

template <class K>
std::vector<RExpr<K>> log_r_coeffs_direct(const SeriesRing<K>& ring, const RiccatiSeries<K>& s) {
    if (s.order < 1) throw std::invalid_argument("log R coefficients need order >= 1");
    auto u = ratios(ring, s);
    const size_t N = static_cast<size_t>(s.order);
    std::vector<RExpr<K>> out(N + 1), power = u;  // power = U^j, truncated
    for (size_t j = 1; j <= N; ++j) {
        if (j > 1) {
            std::vector<RExpr<K>> next(N + 1);
            for (size_t a = 1; a <= N; ++a)
                for (size_t b = 1; a + b <= N; ++b) next[a + b] = ring.add(next[a + b], ring.mul(power[a], u[b]));
            power = std::move(next);
        }
        K c = rat<K>(j % 2 ? 1 : -1, static_cast<long>(j));
        for (size_t n = j; n <= N; ++n) out[n] = ring.add(out[n], ring.scale(power[n], c));
    }
    return {out.begin() + 1, out.end()};
}

template <class K>
std::vector<RExpr<K>> s_coeffs(const SeriesRing<K>& ring, const RiccatiSeries<K>& s, const std::vector<RExpr<K>>& D,
                               int N) {
    if (N > static_cast<int>(D.size())) throw std::invalid_argument("S series needs D_1..D_N");
    // d S_-1 = d log R0 = sign T0' r / D
    RExpr<K> dSm1{{}, ring.T0().w_deriv().scaled(rat<K>(s.sign, ring.cover_degree())), 1};
    dSm1 = ring.normalize(dSm1);
    std::vector<RExpr<K>> dm1{RExpr<K>{}, dSm1};  // d^k S_-1, index 0 unused (log-tagged)
    std::vector<std::vector<RExpr<K>>> dS;         // dS[j][k] = d^k S_j
    auto d_of = [&](int j, int k) -> RExpr<K> {
        if (j == -1) {
            while (static_cast<int>(dm1.size()) <= k) dm1.push_back(ring.dlog(dm1.back()));
            return dm1[static_cast<size_t>(k)];
        }
        auto& row = dS[static_cast<size_t>(j)];
        while (static_cast<int>(row.size()) <= k) row.push_back(ring.dlog(row.back()));
        return row[static_cast<size_t>(k)];
    };
    std::vector<RExpr<K>> S;
    for (int n = 1; n <= N; ++n) {
        RExpr<K> v = D[static_cast<size_t>(n - 1)];
        for (int k = 1; k <= n; ++k) v = ring.sub(v, ring.scale(d_of(n - k - 1, k), inv_factorial<K>(k + 1)));
        S.push_back(v);
        dS.push_back({v});
    }
    return S;
}

template <class K>
std::vector<RExpr<K>> riccati_residual(const SeriesRing<K>& ring, const RiccatiSeries<K>& s) {
    const int N = s.order;
    std::vector<RExpr<K>> Rt(static_cast<size_t>(N) + 1);
    for (int n = 0; n <= N; ++n) {
        RExpr<K> d = s.coeffs[static_cast<size_t>(n)];
        for (int l = 0; n + l <= N; ++l) {
            if (l) d = ring.dlog(d);
            Rt[static_cast<size_t>(n + l)] =
                ring.add(Rt[static_cast<size_t>(n + l)], ring.scale(d, rat<K>(l % 2 ? -1 : 1) * inv_factorial<K>(l)));
        }
    }
    std::vector<RExpr<K>> res(static_cast<size_t>(N) + 1);
    res[0] = ring.constant(rat<K>(1));
    for (int a = 0; a <= N; ++a)
        for (int b = 0; a + b <= N; ++b) {
            auto& slot = res[static_cast<size_t>(a + b)];
            slot = ring.add(slot, ring.mul(s.coeffs[static_cast<size_t>(a)], Rt[static_cast<size_t>(b)]));
            slot = ring.sub(slot, ring.scale(ring.mul(s.T[static_cast<size_t>(a)], Rt[static_cast<size_t>(b)]), rat<K>(2)));
        }
    return res;
}

ResidualTooLarge::ResidualTooLarge(cplx p, int o, double v)
    : std::runtime_error("q-Riccati residual " + std::to_string(v) + " at order " + std::to_string(o) + " at x = " +
                         std::to_string(p.real()) + (p.imag() < 0 ? "" : "+") + std::to_string(p.imag()) + "i"),
      point(p),
      order(o),
      value(v) {}

template <class K>
std::pair<cplx, cplx> ring_point(const SeriesRing<K>& ring, cplx x) {
    cplx w = ring.cover_degree() == 1 ? x : std::pow(x, 1.0 / ring.cover_degree());
    if (std::abs(w) == 0.0) throw std::invalid_argument("sample point at the origin");
    cplx d = ring.D().eval(w);
    if (std::abs(d) < 1e-12) throw std::invalid_argument("sample point at a branch point");
    return {w, std::sqrt(d)};
}

template <class K>
VerifyReport verify_riccati(const SeriesRing<K>& ring, const RiccatiSeries<K>& s, const std::vector<cplx>& points,
                            bool parallel) {
    auto res = riccati_residual(ring, s);
    VerifyReport rep;
    rep.symbolic_zero = true;
    for (const auto& r : res) rep.symbolic_zero = rep.symbolic_zero && r.is_zero();
    const int P = static_cast<int>(points.size());
    rep.per_point.assign(points.size(), std::vector<double>(res.size()));
    std::vector<std::pair<cplx, cplx>> at;
    for (cplx x : points) at.push_back(ring_point(ring, x));
    auto work = [&](int p) {
        for (size_t m = 0; m < res.size(); ++m)
            rep.per_point[static_cast<size_t>(p)][m] = std::abs(ring.eval(res[m], at[static_cast<size_t>(p)].first, at[static_cast<size_t>(p)].second));
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int p = 0; p < P; ++p) work(p);
    } else {
        for (int p = 0; p < P; ++p) work(p);
    }
    const double tol = ring.exact() ? 1e-10 : 1e-8;
    for (int p = 0; p < P; ++p)
        for (size_t m = 0; m < res.size(); ++m) {
            double v = rep.per_point[static_cast<size_t>(p)][m];
            rep.max_residual = std::max(rep.max_residual, v);
            if (!(v < tol)) throw ResidualTooLarge(points[static_cast<size_t>(p)], static_cast<int>(m), v);
        }
    return rep;
}

#define QWKB_SERIES_INSTANTIATE(K)                                                                              \
    template RiccatiSeries<K> riccati_coeffs(const SeriesRing<K>&, const QdeModel&, int, int);                  \
    template std::vector<RExpr<K>> log_r_coeffs(const SeriesRing<K>&, const RiccatiSeries<K>&);                 \
    template std::vector<RExpr<K>> log_r_coeffs_direct(const SeriesRing<K>&, const RiccatiSeries<K>&);          \
    template std::vector<RExpr<K>> s_coeffs(const SeriesRing<K>&, const RiccatiSeries<K>&,                      \
                                            const std::vector<RExpr<K>>&, int);                                 \
    template std::vector<RExpr<K>> riccati_residual(const SeriesRing<K>&, const RiccatiSeries<K>&);             \
    template VerifyReport verify_riccati(const SeriesRing<K>&, const RiccatiSeries<K>&, const std::vector<cplx>&, \
                                         bool);                                                                 \
    template std::pair<cplx, cplx> ring_point(const SeriesRing<K>&, cplx);

QWKB_SERIES_INSTANTIATE(QI)
QWKB_SERIES_INSTANTIATE(cplx)

}  // namespace qwkb
