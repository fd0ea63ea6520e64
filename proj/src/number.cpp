#include "qwkb/number.hpp"

#include <charconv>
#include <cctype>

namespace qwkb {

QI& QI::operator*=(const QI& o) {
    Rat r = re * o.re - im * o.im;
    Rat i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

QI& QI::operator/=(const QI& o) {
    if (o.is_zero()) throw std::domain_error("QI division by zero");
    Rat n = o.norm2();
    Rat r = (re * o.re + im * o.im) / n;
    Rat i = (im * o.re - re * o.im) / n;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

QI pow(const QI& base, long e) {
    if (e < 0) return pow(QI(1) / base, -e);
    QI acc(1), b = base;
    while (e) {
        if (e & 1) acc *= b;
        e >>= 1;
        if (e) b *= b;
    }
    return acc;
}

bool less(const QI& a, const QI& b) {
    if (a.re != b.re) return a.re < b.re;
    return a.im < b.im;
}

static std::string rat_str(const Rat& q) { return q.get_str(); }

std::string to_string(const QI& z) {
    if (sgn(z.im) == 0) return rat_str(z.re);
    std::string imag;
    if (z.im == 1) imag = "i";
    else if (z.im == -1) imag = "-i";
    else imag = rat_str(z.im) + "*i";
    if (sgn(z.re) == 0) return imag;
    std::string s = rat_str(z.re);
    if (imag[0] != '-') s += "+";
    return s + imag;
}

static std::string trim(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

Rat parse_rat(std::string_view raw) {
    std::string s = trim(raw);
    if (s.empty()) throw ParseError("empty number");
    if (auto slash = s.find('/'); slash != std::string::npos) {
        Rat num = parse_rat(s.substr(0, slash));
        Rat den = parse_rat(s.substr(slash + 1));
        if (sgn(den) == 0) throw ParseError("zero denominator in '" + s + "'");
        return num / den;
    }
    bool neg = false;
    size_t p = 0;
    if (s[p] == '+' || s[p] == '-') { neg = s[p] == '-'; ++p; }
    std::string digits;
    long exp10 = 0;
    bool seen_dot = false, any = false;
    for (; p < s.size(); ++p) {
        char c = s[p];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits += c;
            any = true;
            if (seen_dot) --exp10;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else if (c == 'e' || c == 'E') {
            long e = 0;
            auto rest = s.substr(p + 1);
            auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), e);
            if (ec != std::errc() || ptr != rest.data() + rest.size())
                throw ParseError("bad exponent in '" + s + "'");
            exp10 += e;
            p = s.size();
            break;
        } else {
            throw ParseError("bad number '" + s + "'");
        }
    }
    if (!any) throw ParseError("bad number '" + s + "'");
    mpz_class n(digits, 10);
    Rat q(n);
    mpz_class ten = 10, scale;
    mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
    if (exp10 < 0) q /= Rat(scale);
    else q *= Rat(scale);
    q.canonicalize();
    return neg ? Rat(-q) : q;
}

QI parse_qi(std::string_view raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ParseError("empty complex literal");
    if (s.back() != 'i') return QI(parse_rat(s));
    s.pop_back();
    if (!s.empty() && s.back() == '*') s.pop_back();
    // split at the last sign that is not leading and not part of an exponent
    size_t split = std::string::npos;
    for (size_t k = s.size(); k-- > 1;) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    auto imag_of = [](const std::string& t) -> Rat {
        if (t.empty() || t == "+") return Rat(1);
        if (t == "-") return Rat(-1);
        return parse_rat(t);
    };
    if (split == std::string::npos) return QI(Rat(0), imag_of(s));
    return QI(parse_rat(s.substr(0, split)), imag_of(s.substr(split)));
}

Rat rat_from_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw ParseError("cannot format double");
    return parse_rat(std::string_view(buf, static_cast<size_t>(ptr - buf)));
}

QI qi_from_cplx(cplx z) { return QI(rat_from_double(z.real()), rat_from_double(z.imag())); }

}  // namespace qwkb
