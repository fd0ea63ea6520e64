#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qwkb/curve.hpp"

namespace qwkb {

// Scalar traits for the two coefficient fields.
inline bool scalar_is_zero(const QI& z) { return z.is_zero(); }
inline bool scalar_is_zero(const cplx& z) { return z == cplx(0); }
inline cplx scalar_value(const QI& z) { return z.to_cplx(); }
inline cplx scalar_value(const cplx& z) { return z; }
template <class K> K scalar_from(const QI& z);
template <> inline QI scalar_from<QI>(const QI& z) { return z; }
template <> inline cplx scalar_from<cplx>(const QI& z) { return z.to_cplx(); }
inline std::string scalar_string(const QI& z) { return to_string(z); }
std::string scalar_string(const cplx& z);

/// Laurent polynomial in w over K.
template <class K>
struct Poly {
    std::map<long, K> c;

    bool is_zero() const { return c.empty(); }
    long min_exp() const { return c.begin()->first; }
    long max_exp() const { return c.rbegin()->first; }

    void add(long e, const K& v) {
        auto [it, fresh] = c.try_emplace(e, v);
        if (!fresh) {
            it->second += v;
            if (scalar_is_zero(it->second)) c.erase(it);
        } else if (scalar_is_zero(v)) {
            c.erase(it);
        }
    }
    Poly& operator+=(const Poly& o) {
        for (const auto& [e, v] : o.c) add(e, v);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [e, v] : o.c) add(e, -v);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly out;
        for (const auto& [ea, va] : a.c)
            for (const auto& [eb, vb] : b.c) out.add(ea + eb, va * vb);
        return out;
    }
    Poly scaled(const K& s) const {
        Poly out;
        if (scalar_is_zero(s)) return out;
        for (const auto& [e, v] : c) out.c.emplace(e, v * s);
        return out;
    }
    /// w d/dw
    Poly w_deriv() const {
        Poly out;
        for (const auto& [e, v] : c)
            if (e != 0) out.c.emplace(e, v * scalar_from<K>(QI(e)));
        return out;
    }
    cplx eval(cplx w) const {
        cplx s = 0;
        for (const auto& [e, v] : c) s += scalar_value(v) * std::pow(w, static_cast<int>(e));
        return s;
    }
    /// Exact quotient by d, if d divides this.
    std::optional<Poly> div_exact(const Poly& d) const {
        if (is_zero()) return Poly{};
        Poly rem = *this, q;
        const long qlo = min_exp() - d.min_exp();
        const long dtop = d.max_exp();
        const K dc = d.c.rbegin()->second;
        while (!rem.is_zero()) {
            long e = rem.max_exp() - dtop;
            if (e < qlo) return std::nullopt;
            K f = rem.c.rbegin()->second / dc;
            q.add(e, f);
            Poly shift;
            for (const auto& [de, dv] : d.c) shift.c.emplace(de + e, dv * f);
            rem -= shift;
        }
        return q;
    }
    static Poly from(const Laurent& l) {
        Poly p;
        for (const auto& [e, v] : l.c) p.c.emplace(e, scalar_from<K>(v));
        return p;
    }
    friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }
};

template <class K>
std::string to_string(const Poly<K>& p, const std::string& var);

/// (A + B r) / D^e with r^2 = D = T0^2 - 1; A, B Laurent in the cover coordinate w.
template <class K>
struct RExpr {
    Poly<K> A, B;
    int e = 0;
    bool is_zero() const { return A.is_zero() && B.is_zero(); }
};

/// The coefficient ring of the WKB series for one model.
template <class K>
class SeriesRing {
public:
    explicit SeriesRing(const QdeModel& m);

    const Poly<K>& D() const { return D_; }
    const Poly<K>& T0() const { return T0_; }
    int cover_degree() const { return cover_; }
    bool exact() const;

    RExpr<K> constant(const K& v) const;
    RExpr<K> poly(const Poly<K>& p) const { return {p, {}, 0}; }
    RExpr<K> r() const { return {{}, one_, 0}; }

    RExpr<K> add(const RExpr<K>& a, const RExpr<K>& b) const;
    RExpr<K> sub(const RExpr<K>& a, const RExpr<K>& b) const;
    RExpr<K> mul(const RExpr<K>& a, const RExpr<K>& b) const;
    RExpr<K> scale(const RExpr<K>& a, const K& s) const;
    /// d/dlog x = (1/c) w d/dw, with d r = (dD/2) r / D.
    RExpr<K> dlog(const RExpr<K>& a) const;
    /// Multiplication by 1/r = r/D.
    RExpr<K> over_r(const RExpr<K>& a) const;
    /// Cancels common powers of D (exact field only).
    RExpr<K> normalize(RExpr<K> a) const;

    /// Value at w with the given value of r (a square root of D(w)).
    cplx eval(const RExpr<K>& a, cplx w, cplx r) const;
    std::string str(const RExpr<K>& a) const;

private:
    Poly<K> lift(const Poly<K>& p, int k) const;
    Poly<K> T0_, D_, dD_, one_;
    int cover_ = 1;
};

template <class K>
struct RiccatiSeries {
    int sign = 1;
    int order = 0;
    std::vector<RExpr<K>> coeffs;  ///< R_0 .. R_order
    std::vector<RExpr<K>> T;       ///< T_0 .. T_order as ring elements
};

/// Direct solve of the order-n q-Riccati equation: R_n = -(rest_n) / (2 sign r).
template <class K>
RiccatiSeries<K> riccati_coeffs(const SeriesRing<K>& ring, const QdeModel& m, int sign, int N);

/// D_1..D_N from the Hessenberg determinant in u_k = R_k/R_0.
template <class K>
std::vector<RExpr<K>> log_r_coeffs(const SeriesRing<K>& ring, const RiccatiSeries<K>& s);

/// D_1..D_N from log(1 + U) = sum (-1)^{j+1} U^j / j truncated; independent cross-check.
template <class K>
std::vector<RExpr<K>> log_r_coeffs_direct(const SeriesRing<K>& ring, const RiccatiSeries<K>& s);

/// S_0..S_{N-1} from S_{n-1} = D_n - sum_{k=1}^n d^k S_{n-k-1}/(k+1)!, with S_{-1} = log R_0.
template <class K>
std::vector<RExpr<K>> s_coeffs(const SeriesRing<K>& ring, const RiccatiSeries<K>& s,
                               const std::vector<RExpr<K>>& D, int N);

/// Coefficients of hbar^0..hbar^N of R(x) R(q^-1 x) - 2 T R(q^-1 x) + 1.
template <class K>
std::vector<RExpr<K>> riccati_residual(const SeriesRing<K>& ring, const RiccatiSeries<K>& s);

struct ResidualTooLarge : std::runtime_error {
    ResidualTooLarge(cplx point, int order, double value);
    cplx point;
    int order;
    double value;
};

struct VerifyReport {
    double max_residual = 0;
    bool symbolic_zero = false;       ///< every residual coefficient is identically zero
    std::vector<std::vector<double>> per_point;  ///< [point][order]
};

/// Substitutes the truncated series back; throws ResidualTooLarge above tol (1e-10 exact, 1e-8 float).
/// Points are x-values; the parallel path spreads points over OpenMP threads.
template <class K>
VerifyReport verify_riccati(const SeriesRing<K>& ring, const RiccatiSeries<K>& s, const std::vector<cplx>& points,
                            bool parallel = true);

/// Value of r at x for sheet evaluation: the principal root of D(w), w the principal c-th root of x.
template <class K>
std::pair<cplx, cplx> ring_point(const SeriesRing<K>& ring, cplx x);

extern template class SeriesRing<QI>;
extern template class SeriesRing<cplx>;

}  // namespace qwkb
