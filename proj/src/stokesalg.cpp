#include "qwkb/stokesalg.hpp"

#include <cctype>
#include <sstream>

namespace qwkb {

Mat2 stokes_matrix(long ell, const std::string& xi) {
    SymExpr top = ell == 0 ? SymExpr(-1) : -SymExpr::sym(xi, Rat(ell));
    return {top, SymExpr::i(), SymExpr::i(), SymExpr(0)};
}

Mat2 transport_matrix(TransportKind kind, const std::string& Y) {
    SymExpr y = SymExpr::sym(Y), yi = SymExpr::sym(Y, Rat(-1));
    if (kind == TransportKind::diag) return {y, 0, 0, yi};
    return {0, SymExpr::i() * y, SymExpr::i() * yi, 0};
}

Mat2 cut_matrix() { return {0, SymExpr::i(), SymExpr::i(), 0}; }

Mat2 logcut_matrix(long ell, const std::string& xi) {
    return {SymExpr::sym(xi, Rat(-ell)), 0, 0, SymExpr::sym(xi, Rat(ell))};
}

// f = sum_j c_j u^j; coefficient of u^j is read off by exponent ratio.
static std::vector<QI> series_coeffs(const SymExpr& f, const Monomial& u, int order) {
    if (u.powers().size() != 1) throw std::invalid_argument("series variable must be a single symbol power");
    const auto& [name, step] = u.powers().front();
    std::vector<QI> c(static_cast<size_t>(order) + 1);
    for (const auto& [m, coef] : f.terms()) {
        if (m.powers().size() > 1 || (!m.is_one() && m.powers().front().first != name))
            throw NonInvertibleToken("entry is not a series in " + to_string(u));
        Rat j = m.is_one() ? Rat(0) : m.powers().front().second / step;
        if (j.get_den() != 1 || sgn(j) < 0) throw NonInvertibleToken("entry is not a series in " + to_string(u));
        long jj = j.get_num().get_si();
        if (jj <= order) c[static_cast<size_t>(jj)] = coef;
    }
    return c;
}

SymExpr series_inverse(const SymExpr& f, const Monomial& u, int order) {
    auto c = series_coeffs(f, u, order);
    if (c[0].is_zero()) throw NonInvertibleToken("series with vanishing constant term");
    std::vector<QI> g(c.size());
    g[0] = QI(1) / c[0];
    for (size_t n = 1; n < c.size(); ++n) {
        QI acc;
        for (size_t k = 1; k <= n; ++k) acc += c[k] * g[n - k];
        g[n] = -acc / c[0];
    }
    SymExpr out;
    for (size_t n = 0; n < g.size(); ++n) out += SymExpr(g[n], u.pow(Rat(static_cast<long>(n))));
    return out;
}

LogPunctureMatrices log_puncture_matrices(long k, const std::string& xi, int order) {
    if (order < 1) throw std::invalid_argument("log puncture matrices need order >= 1");
    Monomial up = Monomial::of(xi, Rat(k)), um = Monomial::of(xi, Rat(-k));
    SymExpr one_p = SymExpr(1) + SymExpr(QI(1), up);
    SymExpr one_m = SymExpr(1) + SymExpr(QI(1), um);
    LogPunctureMatrices L;
    L.minus = {one_m, 0, 0, series_inverse(one_m, um, order)};
    L.plus = {series_inverse(one_p, up, order), 0, 0, one_p};
    return L;
}

Mat2 flatness_residual(long k, const std::string& xi, int order) {
    auto L = log_puncture_matrices(k, xi, order);
    Mat2 shift{SymExpr::sym(xi, Rat(k)), 0, 0, SymExpr::sym(xi, Rat(-k))};
    Mat2 r = L.minus * shift * L.plus;
    r.a -= SymExpr(1);
    r.d -= SymExpr(1);
    return r;
}

// ---- words ----

namespace {

struct WordLexer {
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
    bool eat(std::string_view lit) {
        skip();
        if (s.substr(p, lit.size()) == lit) { p += lit.size(); return true; }
        return false;
    }
    std::string ident() {
        skip();
        size_t a = p;
        while (p < s.size() && (std::isalnum(static_cast<unsigned char>(s[p])) || s[p] == '_')) ++p;
        return std::string(s.substr(a, p - a));
    }
    std::string arg() {
        skip();
        size_t a = p;
        while (p < s.size() && s[p] != ',' && s[p] != ')') ++p;
        std::string out(s.substr(a, p - a));
        while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
        return out;
    }
};

long to_long(const std::string& t) {
    try {
        size_t used = 0;
        long v = std::stol(t, &used);
        if (used != t.size()) throw WordError("bad integer '" + t + "'");
        return v;
    } catch (const std::logic_error&) {
        throw WordError("bad integer '" + t + "'");
    }
}

}  // namespace

PathWord parse_word(std::string_view text) {
    WordLexer lx{text};
    PathWord w;
    lx.skip();
    if (lx.p >= text.size()) return w;
    while (true) {
        std::string name = lx.ident();
        if (name.empty()) throw WordError("expected token at offset " + std::to_string(lx.p));
        std::vector<std::string> args;
        if (lx.eat('(')) {
            if (!lx.eat(')')) {
                do args.push_back(lx.arg());
                while (lx.eat(','));
                if (!lx.eat(')')) throw WordError("missing ')' after " + name);
            }
        }
        Token t;
        auto need = [&](size_t lo, size_t hi) {
            if (args.size() < lo || args.size() > hi)
                throw WordError("wrong argument count for " + name);
        };
        if (name == "S" || name == "Sinv") {
            need(1, 2);
            t.kind = Token::Kind::stokes;
            t.ell = to_long(args[0]);
            t.symbol = args.size() > 1 ? args[1] : "xi";
            t.inverse = name == "Sinv";
        } else if (name == "Toff" || name == "Toffinv" || name == "Tdiag" || name == "Tdiaginv") {
            need(1, 1);
            t.kind = name.rfind("Toff", 0) == 0 ? Token::Kind::transport_off : Token::Kind::transport_diag;
            t.symbol = args[0];
            t.inverse = name.size() > 4 && name.substr(name.size() - 3) == "inv";
        } else if (name == "Lp" || name == "Lm") {
            need(3, 3);
            t.kind = name == "Lp" ? Token::Kind::l_plus : Token::Kind::l_minus;
            t.ell = to_long(args[0]);
            t.symbol = args[1];
            t.order = static_cast<int>(to_long(args[2]));
        } else if (name == "Beta") {
            need(0, 0);
            t.kind = Token::Kind::cut;
        } else if (name == "Logcut") {
            need(2, 2);
            t.kind = Token::Kind::logcut;
            t.ell = to_long(args[0]);
            t.symbol = args[1];
        } else {
            throw WordError("unknown token '" + name + "'");
        }
        if (lx.eat("^-1")) t.inverse = !t.inverse;
        if (t.symbol.size() && symbol_kind(t.symbol) == SymbolKind::constant)
            throw WordError("symbol '" + t.symbol + "' has no recognised kind");
        w.push_back(std::move(t));
        lx.skip();
        if (lx.p >= text.size()) break;
        if (!lx.eat('*')) throw WordError("expected '*' at offset " + std::to_string(lx.p));
    }
    return w;
}

std::string to_string(const PathWord& w) {
    std::ostringstream os;
    for (size_t k = 0; k < w.size(); ++k) {
        const Token& t = w[k];
        if (k) os << " * ";
        switch (t.kind) {
            case Token::Kind::stokes: os << "S(" << t.ell << "," << t.symbol << ")"; break;
            case Token::Kind::transport_off: os << "Toff(" << t.symbol << ")"; break;
            case Token::Kind::transport_diag: os << "Tdiag(" << t.symbol << ")"; break;
            case Token::Kind::l_plus: os << "Lp(" << t.ell << "," << t.symbol << "," << t.order << ")"; break;
            case Token::Kind::l_minus: os << "Lm(" << t.ell << "," << t.symbol << "," << t.order << ")"; break;
            case Token::Kind::cut: os << "Beta"; break;
            case Token::Kind::logcut: os << "Logcut(" << t.ell << "," << t.symbol << ")"; break;
        }
        if (t.inverse) os << "^-1";
    }
    return os.str();
}

Mat2 token_matrix(const Token& t) {
    Mat2 m;
    switch (t.kind) {
        case Token::Kind::stokes: m = stokes_matrix(t.ell, t.symbol); break;
        case Token::Kind::transport_off: m = transport_matrix(TransportKind::offdiag, t.symbol); break;
        case Token::Kind::transport_diag: m = transport_matrix(TransportKind::diag, t.symbol); break;
        case Token::Kind::cut: m = cut_matrix(); break;
        case Token::Kind::logcut: m = logcut_matrix(t.ell, t.symbol); break;
        case Token::Kind::l_plus:
        case Token::Kind::l_minus: {
            auto L = log_puncture_matrices(t.ell, t.symbol, t.order);
            m = t.kind == Token::Kind::l_plus ? L.plus : L.minus;
            if (t.inverse) {
                Monomial up = Monomial::of(t.symbol, Rat(t.ell)), um = Monomial::of(t.symbol, Rat(-t.ell));
                const Monomial& u = t.kind == Token::Kind::l_plus ? up : um;
                return {series_inverse(m.a, u, t.order), 0, 0, series_inverse(m.d, u, t.order)};
            }
            return m;
        }
    }
    return t.inverse ? m.inverse() : m;
}

Mat2 compose_path(const PathWord& word) {
    Mat2 acc = Mat2::identity();
    for (const Token& t : word) acc = acc * token_matrix(t);
    return acc;
}

TraceMode parse_trace_mode(const std::string& s) {
    if (s == "xi_graded") return TraceMode::xi_graded;
    if (s == "drop_all_xi") return TraceMode::drop_all_xi;
    throw std::invalid_argument("unknown trace mode '" + s + "'");
}

std::string to_string(TraceMode m) { return m == TraceMode::xi_graded ? "xi_graded" : "drop_all_xi"; }

SymExpr regularize(const SymExpr& e, TraceMode mode) {
    if (mode == TraceMode::xi_graded)
        return e.filter([](const Monomial& m, const QI&) { return sgn(m.x_weight()) == 0; });
    return e.filter([](const Monomial& m, const QI&) { return !m.has_shift(); });
}

SymExpr regularized_trace(const Mat2& m, TraceMode mode) { return regularize(m.trace(), mode); }

SymExpr anchor_rewrite(const SymExpr& e) {
    std::map<std::string, SymExpr> rules;
    for (const auto& [m, c] : e.terms())
        for (const auto& [name, p] : m.powers())
            if (symbol_kind(name) == SymbolKind::shift && name != "xi")
                rules.emplace(name, SymExpr::sym("c_" + name) * SymExpr::sym("xi"));
    return e.substitute(rules);
}

// ---- cross-ratios ----

namespace {

using Vec2 = std::pair<SymExpr, SymExpr>;

SymExpr wedge(const Vec2& u, const Vec2& v) { return u.first * v.second - u.second * v.first; }

}  // namespace

SymExpr fg_cross_ratio(Signature sig, long ell, long ell_prime) {
    // coefficient vectors in the basis (s1, s2) with s1 ^ s2 = 1
    Mat2 base{0, 1, 1, 0};
    Mat2 T = transport_matrix(sig == Signature::opposite ? TransportKind::offdiag : TransportKind::diag, "Y");
    Mat2 n = base * stokes_matrix(ell_prime, "xi_bp") * T.inverse() * stokes_matrix(ell, "xi_b").inverse();
    Vec2 s1{1, 0}, s2{0, 1};
    Vec2 s3{n.b, n.d}, s4{n.a, n.c};
    SymExpr num = wedge(s1, s2) * wedge(s3, s4);
    SymExpr den = wedge(s2, s3) * wedge(s1, s4);
    if (den.is_zero()) throw std::domain_error("degenerate cross-ratio");
    return num * den.inverse();
}

// ---- framed transport ----

std::vector<FramedTerm> framed_trace_terms(const std::vector<Detour>& detours, const std::string& lift_i,
                                           const std::string& lift_j) {
    // entry (r, c) holds the words reaching sheet c from sheet r
    struct Word {
        SymExpr mono;
        long shift;
    };
    using Entry = std::vector<Word>;
    Entry e[2][2];
    e[0][0] = {{SymExpr(1), 0}};
    e[1][1] = {{SymExpr(1), 0}};
    for (const Detour& d : detours) {
        bool up = d.from == 'i' && d.to == 'j';
        bool down = d.from == 'j' && d.to == 'i';
        if (!up && !down)
            throw MalformedDetour("detour " + d.symbol + " of type (" + std::string{d.from, d.to} +
                                  ") does not exchange sheets i and j");
        if (symbol_kind(d.symbol) != SymbolKind::soliton)
            throw MalformedDetour("detour symbol " + d.symbol + " is not a soliton symbol");
        int r = up ? 0 : 1, c = up ? 1 : 0;
        // right multiplication by 1 + X E_{rc}: column c gains column r times X
        Entry add[2];
        for (int row = 0; row < 2; ++row)
            for (const Word& w : e[row][r]) add[row].push_back({w.mono * SymExpr::sym(d.symbol), w.shift + d.n});
        for (int row = 0; row < 2; ++row)
            e[row][c].insert(e[row][c].end(), add[row].begin(), add[row].end());
    }
    std::vector<FramedTerm> out;
    for (const Word& w : e[0][0]) out.push_back({SymExpr::sym(lift_i) * w.mono, w.shift});
    for (const Word& w : e[1][1]) out.push_back({SymExpr::sym(lift_j) * w.mono, w.shift});
    return out;
}

SymExpr framed_transport(const std::vector<Detour>& detours, const std::string& lift_i, const std::string& lift_j) {
    SymExpr total;
    for (const auto& t : framed_trace_terms(detours, lift_i, lift_j))
        if (t.shift == 0) total += t.monomial;
    return total;
}

}  // namespace qwkb
