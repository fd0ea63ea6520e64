#pragma once

#include <gmpxx.h>

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qwkb {

using Rat = mpq_class;
using cplx = std::complex<double>;

/// Exact element of Q(i), stored as re + im*i with canonical rationals.
struct QI {
    Rat re{0};
    Rat im{0};

    QI() = default;
    QI(long r) : re(r), im(0) {}
    QI(Rat r, Rat i = Rat(0)) : re(std::move(r)), im(std::move(i)) {
        re.canonicalize();
        im.canonicalize();
    }

    static QI i() { return QI(Rat(0), Rat(1)); }

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_one() const { return re == 1 && sgn(im) == 0; }
    QI conj() const { return QI(re, -im); }
    Rat norm2() const { return re * re + im * im; }
    cplx to_cplx() const { return {re.get_d(), im.get_d()}; }

    QI& operator+=(const QI& o) { re += o.re; im += o.im; return *this; }
    QI& operator-=(const QI& o) { re -= o.re; im -= o.im; return *this; }
    QI& operator*=(const QI& o);
    QI& operator/=(const QI& o);
    QI operator-() const { return QI(-re, -im); }
};

inline QI operator+(QI a, const QI& b) { return a += b; }
inline QI operator-(QI a, const QI& b) { return a -= b; }
inline QI operator*(QI a, const QI& b) { return a *= b; }
inline QI operator/(QI a, const QI& b) { return a /= b; }
inline bool operator==(const QI& a, const QI& b) { return a.re == b.re && a.im == b.im; }
inline bool operator!=(const QI& a, const QI& b) { return !(a == b); }

/// Integer power; negative exponents invert (the base must be nonzero).
QI pow(const QI& base, long e);

/// Strict weak order used for canonical term ordering (by re, then im).
bool less(const QI& a, const QI& b);

/// Shortest human form: "3", "-1/2", "3/100*i", "1/2-3/4*i".
std::string to_string(const QI& z);

/// Parses a decimal or fraction literal exactly ("0.97", "-3/4", "1e-3").
Rat parse_rat(std::string_view s);

/// Parses "a", "bi", "a+bi", "a-b*i", "i", "-i"; parts as in parse_rat.
QI parse_qi(std::string_view s);

/// Rational read off the shortest round-trip decimal of x (0.97 -> 97/100).
Rat rat_from_double(double x);
QI qi_from_cplx(cplx z);

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qwkb
