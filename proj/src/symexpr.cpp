#include "qwkb/symexpr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace qwkb {

SymbolKind symbol_kind(const std::string& name) {
    if (name.rfind("xi", 0) == 0) return SymbolKind::shift;
    if (name.rfind("Y", 0) == 0) return SymbolKind::voros;
    if (name.rfind("X_", 0) == 0) return SymbolKind::charge;
    if (name.rfind("X", 0) == 0) return SymbolKind::soliton;
    return SymbolKind::constant;
}

std::string shift_anchor(const std::string& name) {
    if (symbol_kind(name) != SymbolKind::shift)
        throw std::invalid_argument("not a shift symbol: " + name);
    return name.substr(2);
}

// ---- Monomial ----

Monomial Monomial::of(const std::string& name, const Rat& e) {
    Monomial m;
    Rat c = e;
    c.canonicalize();
    if (sgn(c) != 0) m.pows_.emplace_back(name, c);
    return m;
}

Rat Monomial::exponent(const std::string& name) const {
    for (const auto& [n, e] : pows_)
        if (n == name) return e;
    return Rat(0);
}

Monomial Monomial::operator*(const Monomial& o) const {
    Monomial out;
    auto i = pows_.begin(), j = o.pows_.begin();
    while (i != pows_.end() || j != o.pows_.end()) {
        if (j == o.pows_.end() || (i != pows_.end() && i->first < j->first)) {
            out.pows_.push_back(*i++);
        } else if (i == pows_.end() || j->first < i->first) {
            out.pows_.push_back(*j++);
        } else {
            Rat e = i->second + j->second;
            if (sgn(e) != 0) out.pows_.emplace_back(i->first, e);
            ++i;
            ++j;
        }
    }
    return out;
}

Monomial Monomial::pow(const Rat& e) const {
    Monomial out;
    if (sgn(e) == 0) return out;
    for (const auto& [n, x] : pows_) out.pows_.emplace_back(n, x * e);
    return out;
}

Rat Monomial::x_weight() const {
    Rat w(0);
    for (const auto& [n, e] : pows_)
        if (symbol_kind(n) == SymbolKind::shift) w += e;
    return w;
}

bool Monomial::has_shift() const {
    return std::any_of(pows_.begin(), pows_.end(),
                       [](const auto& p) { return symbol_kind(p.first) == SymbolKind::shift; });
}

bool operator<(const Monomial& a, const Monomial& b) {
    size_t n = std::min(a.pows_.size(), b.pows_.size());
    for (size_t k = 0; k < n; ++k) {
        const auto& [na, ea] = a.pows_[k];
        const auto& [nb, eb] = b.pows_[k];
        if (na != nb) return na < nb;
        if (ea != eb) return ea < eb;
    }
    return a.pows_.size() < b.pows_.size();
}

// ---- SymExpr ----

SymExpr::SymExpr(const QI& c) {
    if (!c.is_zero()) terms_.emplace(Monomial{}, c);
}

SymExpr::SymExpr(const QI& c, const Monomial& m) {
    if (!c.is_zero()) terms_.emplace(m, c);
}

SymExpr SymExpr::sym(const std::string& name, const Rat& e) {
    return SymExpr(QI(1), Monomial::of(name, e));
}

void SymExpr::add_term(const Monomial& m, const QI& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = terms_.try_emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

SymExpr& SymExpr::operator+=(const SymExpr& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
}

SymExpr& SymExpr::operator-=(const SymExpr& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
}

SymExpr& SymExpr::operator*=(const SymExpr& o) {
    SymExpr out;
    for (const auto& [ma, ca] : terms_)
        for (const auto& [mb, cb] : o.terms_) out.add_term(ma * mb, ca * cb);
    *this = std::move(out);
    return *this;
}

SymExpr SymExpr::operator-() const {
    SymExpr out;
    for (const auto& [m, c] : terms_) out.terms_.emplace(m, -c);
    return out;
}

SymExpr SymExpr::inverse() const {
    if (terms_.size() != 1) throw std::domain_error("inverse of a non-monomial expression: " + to_string(*this));
    const auto& [m, c] = *terms_.begin();
    return SymExpr(QI(1) / c, m.inverse());
}

SymExpr SymExpr::pow(long e) const {
    if (e < 0) return inverse().pow(-e);
    SymExpr acc(1), b = *this;
    while (e) {
        if (e & 1) acc *= b;
        e >>= 1;
        if (e) b *= b;
    }
    return acc;
}

SymExpr SymExpr::substitute(const std::map<std::string, SymExpr>& rules) const {
    SymExpr out;
    for (const auto& [m, c] : terms_) {
        SymExpr t(c);
        Monomial kept;
        for (const auto& [name, e] : m.powers()) {
            auto it = rules.find(name);
            if (it == rules.end()) {
                kept = kept * Monomial::of(name, e);
                continue;
            }
            const SymExpr& r = it->second;
            if (e.get_den() == 1) {
                t *= r.pow(e.get_num().get_si());
            } else {
                if (!r.is_monomial()) throw std::domain_error("fractional power of a sum for " + name);
                const auto& [rm, rc] = *r.terms_.begin();
                if (!rc.is_one()) throw std::domain_error("fractional power of a non-unit coefficient for " + name);
                t *= SymExpr(QI(1), rm.pow(e));
            }
        }
        t *= SymExpr(QI(1), kept);
        out += t;
    }
    return out;
}

cplx SymExpr::evaluate(const std::map<std::string, cplx>& values) const {
    cplx total = 0;
    for (const auto& [m, c] : terms_) {
        cplx t = c.to_cplx();
        for (const auto& [name, e] : m.powers()) {
            auto it = values.find(name);
            if (it == values.end()) throw std::out_of_range("no value for symbol " + name);
            if (e.get_den() == 1) t *= std::pow(it->second, static_cast<int>(e.get_num().get_si()));
            else t *= std::pow(it->second, e.get_d());
        }
        total += t;
    }
    return total;
}

// ---- printing ----

std::string to_string(const Monomial& m) {
    std::string s;
    for (const auto& [name, e] : m.powers()) {
        if (!s.empty()) s += "*";
        s += name;
        if (e != 1) {
            std::string es = e.get_str();
            s += "^" + (e.get_den() == 1 && sgn(e) > 0 ? es : "(" + es + ")");
        }
    }
    return s;
}

static bool needs_parens(const QI& c) { return sgn(c.re) != 0 && sgn(c.im) != 0; }

std::string to_string(const SymExpr& e) {
    if (e.is_zero()) return "0";
    std::string s;
    bool first = true;
    for (const auto& [m, c] : e.terms()) {
        QI coef = c;
        bool neg = false;
        // pull a leading minus out of purely real or purely imaginary coefficients
        if (!needs_parens(coef) && (sgn(coef.re) < 0 || (sgn(coef.re) == 0 && sgn(coef.im) < 0))) {
            neg = true;
            coef = -coef;
        }
        if (first) s += neg ? "-" : "";
        else s += neg ? " - " : " + ";
        first = false;
        std::string cs = to_string(coef);
        if (needs_parens(coef)) cs = "(" + cs + ")";
        if (m.is_one()) {
            s += cs;
        } else {
            if (!coef.is_one()) s += cs + "*";
            s += to_string(m);
        }
    }
    return s;
}

std::string to_string(const Mat2& m) {
    return "[[" + to_string(m.a) + ", " + to_string(m.b) + "], [" + to_string(m.c) + ", " + to_string(m.d) + "]]";
}

// ---- parsing ----

namespace {

struct Lexer {
    std::string_view s;
    size_t p = 0;
    void skip() {
        while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
    }
    bool eat(char c) {
        skip();
        if (p < s.size() && s[p] == c) { ++p; return true; }
        return false;
    }
    bool at_end() { skip(); return p >= s.size(); }
    char peek() { skip(); return p < s.size() ? s[p] : '\0'; }
    std::string ident() {
        skip();
        size_t a = p;
        while (p < s.size() && (std::isalnum(static_cast<unsigned char>(s[p])) || s[p] == '_')) ++p;
        return std::string(s.substr(a, p - a));
    }
    std::string number() {
        skip();
        size_t a = p;
        while (p < s.size() && (std::isdigit(static_cast<unsigned char>(s[p])) || s[p] == '.' || s[p] == '/')) ++p;
        return std::string(s.substr(a, p - a));
    }
};

SymExpr parse_factor(Lexer& lx) {
    if (lx.eat('(')) {
        // parenthesised complex coefficient or sub-sum
        size_t depth = 1, a = lx.p;
        while (lx.p < lx.s.size() && depth) {
            if (lx.s[lx.p] == '(') ++depth;
            if (lx.s[lx.p] == ')') --depth;
            ++lx.p;
        }
        if (depth) throw ParseError("unbalanced parenthesis");
        auto inner = lx.s.substr(a, lx.p - a - 1);
        try {
            return SymExpr(parse_qi(inner));
        } catch (const ParseError&) {
            return parse_symexpr(inner);
        }
    }
    char c = lx.peek();
    if (std::isdigit(static_cast<unsigned char>(c))) return SymExpr(QI(parse_rat(lx.number())));
    std::string name = lx.ident();
    if (name.empty()) throw ParseError("expected factor at offset " + std::to_string(lx.p));
    if (name == "i") return SymExpr::i();
    Rat e(1);
    if (lx.eat('^')) {
        if (lx.eat('(')) {
            size_t a = lx.p;
            while (lx.p < lx.s.size() && lx.s[lx.p] != ')') ++lx.p;
            e = parse_rat(lx.s.substr(a, lx.p - a));
            lx.eat(')');
        } else {
            bool neg = lx.eat('-');
            e = parse_rat(lx.number());
            if (neg) e = -e;
        }
    }
    return SymExpr::sym(name, e);
}

SymExpr parse_term(Lexer& lx) {
    SymExpr t = parse_factor(lx);
    while (lx.eat('*')) t *= parse_factor(lx);
    return t;
}

}  // namespace

SymExpr parse_symexpr(std::string_view text) {
    Lexer lx{text};
    SymExpr total;
    bool neg = false;
    if (lx.eat('-')) neg = true;
    else lx.eat('+');
    while (true) {
        SymExpr t = parse_term(lx);
        total += neg ? -t : t;
        if (lx.at_end()) break;
        if (lx.eat('+')) neg = false;
        else if (lx.eat('-')) neg = true;
        else throw ParseError("unexpected character '" + std::string(1, lx.peek()) + "'");
    }
    return total;
}

// ---- Mat2 ----

Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

Mat2 Mat2::inverse() const {
    SymExpr inv_det = det().inverse();
    return {d * inv_det, -b * inv_det, -c * inv_det, a * inv_det};
}

}  // namespace qwkb
