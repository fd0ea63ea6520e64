#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qwkb/number.hpp"

namespace qwkb {

/// Laurent polynomial in w with exact coefficients; zero coefficients never stored.
struct Laurent {
    std::map<long, QI> c;

    Laurent() = default;
    Laurent(std::map<long, QI> terms);
    static Laurent monomial(long e, const QI& coef = QI(1));

    bool is_zero() const { return c.empty(); }
    bool is_constant() const { return c.empty() || (c.size() == 1 && c.begin()->first == 0); }
    long min_exp() const;
    long max_exp() const;
    QI coeff(long e) const;

    cplx eval(cplx w) const;
    /// w d/dw
    Laurent w_deriv() const;

    Laurent& operator+=(const Laurent& o);
    Laurent& operator-=(const Laurent& o);
    Laurent operator*(const Laurent& o) const;
    Laurent operator*(const QI& s) const;
    Laurent operator+(const Laurent& o) const { Laurent r = *this; return r += o; }
    Laurent operator-(const Laurent& o) const { Laurent r = *this; return r -= o; }
    friend bool operator==(const Laurent& a, const Laurent& b) { return a.c == b.c; }
};

std::string to_string(const Laurent& p, const std::string& var = "w");

enum class Location { origin, infinity, finite };
std::string to_string(Location l);

/// Which branch point a logarithmic cut from a puncture at 0 or infinity ends on.
struct LogCutPairing {
    Location puncture = Location::infinity;
    cplx branch_point;  ///< w-coordinate, matched to the nearest computed branch point
};

/// psi(qx) + psi(q^-1 x) = 2 T(x, q) psi(x) with T = sum_k T_k(w) hbar^k and x = w^c.
struct QdeModel {
    std::string name;
    int cover_degree = 1;
    std::vector<Laurent> T;
    std::map<std::string, QI> parameters;
    /// Point where y_+ is the principal-root sheet T0 + sqrt(T0^2 - 1); labels propagate by continuity.
    cplx sheet_anchor{2.0, 0.0};
    std::vector<LogCutPairing> log_cut_pairs;

    const Laurent& T0() const { return T.at(0); }
    Laurent Tk(size_t k) const { return k < T.size() ? T[k] : Laurent{}; }
    cplx x_of(cplx w) const;
    /// Principal c-th root.
    cplx w_of(cplx x) const;
    cplx t0(cplx w) const { return T0().eval(w); }
    /// dT0/dx at w.
    cplx dt0_dx(cplx w) const;
    /// Throws std::invalid_argument when the invariants fail.
    void validate() const;
};

struct LogPunctureHit : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateSheets : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonSimpleBranchPoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergentProduct : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Principal square root with a negative-zero imaginary part read as +0, so the cut is approached from above.
inline cplx principal_sqrt(cplx z) { return std::sqrt(cplx(z.real(), z.imag() + 0.0)); }

/// (y_+, y_-) = T0 +- sqrt(T0^2 - 1) with the principal root; branch_choice < 0 swaps them.
std::pair<cplx, cplx> sheets_at(const QdeModel& m, cplx w, int branch_choice = +1);

enum class SignatureTag { unknown, pm, mp };
std::string to_string(SignatureTag s);

struct BranchPoint {
    cplx position;       ///< w-coordinate
    int sign_class = 1;  ///< T0(position)
    cplx c0;             ///< T0 = s (1 + c0^2/2 (x - x0)) + ...
    SignatureTag signature = SignatureTag::unknown;
    long enc_log_shift = 0;
};

/// All simple roots of T0^2 = 1, sorted by (real, imag); Newton-polished to 1e-13.
std::vector<BranchPoint> branch_points(const QdeModel& m);

enum class PunctureKind { logarithmic, regular, apparent, colliding };
std::string to_string(PunctureKind k);

struct Puncture {
    Location location = Location::origin;
    cplx x_star;
    PunctureKind kind = PunctureKind::regular;
    long degree_k = 0;  ///< T0 ~ u^k in the local cover coordinate u (w at 0, 1/w at infinity)
    cplx mu;            ///< regular kind: limiting y-values e^{+-mu}
    std::pair<cplx, cplx> limit_values;
};

std::vector<Puncture> classify_punctures(const QdeModel& m);

/// prod_{k=0}^{terms-1} (1 - x q^k); then (qx; q)(1 - x) = (x; q) holds factorwise.
cplx qpochhammer(cplx x, cplx q, int terms);

}  // namespace qwkb
