#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qwkb/number.hpp"

namespace qwkb {

enum class SymbolKind { voros, shift, soliton, charge, constant };

/// Kind is read off the name: xi* shift, Y* Voros, X_* charge, X* soliton.
SymbolKind symbol_kind(const std::string& name);

/// Anchor of a shift symbol: "xi2" -> "2", "xi" -> "".
std::string shift_anchor(const std::string& name);

/// Product of symbols raised to nonzero rational powers, sorted by name.
class Monomial {
public:
    Monomial() = default;
    static Monomial of(const std::string& name, const Rat& e = Rat(1));

    const std::vector<std::pair<std::string, Rat>>& powers() const { return pows_; }
    bool is_one() const { return pows_.empty(); }
    Rat exponent(const std::string& name) const;

    Monomial operator*(const Monomial& o) const;
    Monomial pow(const Rat& e) const;
    Monomial inverse() const { return pow(Rat(-1)); }

    /// Sum of exponents of shift symbols: the x^{2 pi i/hbar} weight.
    Rat x_weight() const;
    bool has_shift() const;

    friend bool operator<(const Monomial& a, const Monomial& b);
    friend bool operator==(const Monomial& a, const Monomial& b) { return a.pows_ == b.pows_; }

private:
    std::vector<std::pair<std::string, Rat>> pows_;
};

/// Finite sum of QI-weighted monomials; zero coefficients never stored.
class SymExpr {
public:
    SymExpr() = default;
    SymExpr(long c) : SymExpr(QI(c)) {}
    SymExpr(const QI& c);
    SymExpr(const QI& c, const Monomial& m);

    static SymExpr sym(const std::string& name, const Rat& e = Rat(1));
    static SymExpr i() { return SymExpr(QI::i()); }

    const std::map<Monomial, QI>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_monomial() const { return terms_.size() == 1; }
    size_t size() const { return terms_.size(); }

    SymExpr& operator+=(const SymExpr& o);
    SymExpr& operator-=(const SymExpr& o);
    SymExpr& operator*=(const SymExpr& o);
    SymExpr operator-() const;

    /// Inverse of a single nonzero term; throws for sums.
    SymExpr inverse() const;
    /// Integer power; negative powers need a single term.
    SymExpr pow(long e) const;

    /// Keep only terms satisfying pred.
    template <class Pred>
    SymExpr filter(Pred pred) const {
        SymExpr out;
        for (const auto& [m, c] : terms_)
            if (pred(m, c)) out.terms_.emplace(m, c);
        return out;
    }

    /// Replace each symbol by an expression (symbols absent from the map stay).
    /// Non-integer exponents are only allowed on symbols mapped to single terms.
    SymExpr substitute(const std::map<std::string, SymExpr>& rules) const;

    /// Numeric value given symbol values (principal branch for rational powers).
    cplx evaluate(const std::map<std::string, cplx>& values) const;

    friend bool operator==(const SymExpr& a, const SymExpr& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const SymExpr& a, const SymExpr& b) { return !(a == b); }

private:
    void add_term(const Monomial& m, const QI& c);
    std::map<Monomial, QI> terms_;
};

inline SymExpr operator+(SymExpr a, const SymExpr& b) { return a += b; }
inline SymExpr operator-(SymExpr a, const SymExpr& b) { return a -= b; }
inline SymExpr operator*(SymExpr a, const SymExpr& b) { return a *= b; }

std::string to_string(const Monomial& m);
std::string to_string(const SymExpr& e);

/// Parses the printed form back: sums of "c*A^p*B^q" terms, p rational.
SymExpr parse_symexpr(std::string_view text);

/// 2x2 matrix over SymExpr, row-major.
struct Mat2 {
    SymExpr a{1}, b{0}, c{0}, d{1};

    static Mat2 identity() { return {}; }
    SymExpr det() const { return a * d - b * c; }
    SymExpr trace() const { return a + d; }
    /// Adjugate over det; det must be a single term.
    Mat2 inverse() const;

    friend Mat2 operator*(const Mat2& x, const Mat2& y);
    friend bool operator==(const Mat2& x, const Mat2& y) {
        return x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d;
    }
};

std::string to_string(const Mat2& m);

}  // namespace qwkb
