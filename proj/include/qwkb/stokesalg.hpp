#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qwkb/symexpr.hpp"

namespace qwkb {

/// [[-xi^ell, i], [i, 0]]; ell = 0 is the branch-point Stokes matrix.
Mat2 stokes_matrix(long ell, const std::string& xi = "xi");

enum class TransportKind { offdiag, diag };

/// offdiag: [[0, iY], [iY^-1, 0]]; diag: diag(Y, Y^-1).
Mat2 transport_matrix(TransportKind kind, const std::string& Y);

/// Square-root cut crossing [[0, i], [i, 0]].
Mat2 cut_matrix();

/// Logarithmic cut crossing xi^{-ell sigma_3}.
Mat2 logcut_matrix(long ell, const std::string& xi);

/// Truncated inverse of a power series sum_j c_j u^j with c_0 != 0, kept to u^order.
SymExpr series_inverse(const SymExpr& f, const Monomial& u, int order);

struct LogPunctureMatrices {
    Mat2 plus;   ///< series in xi^k
    Mat2 minus;  ///< series in xi^-k
};

/// L- = diag(1 + xi^-k, (1 + xi^-k)^-1), L+ = diag((1 + xi^k)^-1, 1 + xi^k); inverses truncated at order.
LogPunctureMatrices log_puncture_matrices(long k, const std::string& xi, int order);

/// L- * xi^{k sigma_3} * L+ - 1; every surviving term has |xi exponent| > order*|k|.
Mat2 flatness_residual(long k, const std::string& xi, int order);

struct Token {
    enum class Kind { stokes, transport_off, transport_diag, l_plus, l_minus, cut, logcut };
    Kind kind = Kind::stokes;
    long ell = 0;            ///< stokes/logcut label, or k for L tokens
    std::string symbol;      ///< xi name or Voros name
    int order = 0;           ///< truncation order for L tokens
    bool inverse = false;
};

using PathWord = std::vector<Token>;

struct WordError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonInvertibleToken : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Grammar: tokens joined by '*'; each token one of
///   S(l[,xi]) Sinv(l[,xi]) Toff(Y) Toffinv(Y) Tdiag(Y) Tdiaginv(Y)
///   Lp(k,xi,N) Lm(k,xi,N) Beta Logcut(l,xi)
/// optionally followed by ^-1. An empty string is the empty word.
PathWord parse_word(std::string_view text);
std::string to_string(const PathWord& w);

Mat2 token_matrix(const Token& t);

/// Left-to-right product; inverses are adjugates (det = 1) or truncated series for L tokens.
Mat2 compose_path(const PathWord& word);

enum class TraceMode { xi_graded, drop_all_xi };

TraceMode parse_trace_mode(const std::string& s);
std::string to_string(TraceMode m);

/// xi_graded keeps x-weight 0 terms; drop_all_xi keeps terms free of shift symbols.
SymExpr regularized_trace(const Mat2& m, TraceMode mode);
SymExpr regularize(const SymExpr& e, TraceMode mode);

/// Rewrites xi_k -> c_xi_k * xi with c_xi_k = x_k^{-2 pi i/hbar}, a common base point.
SymExpr anchor_rewrite(const SymExpr& e);

enum class Signature { opposite, same };

/// Wedge cross-ratio of the four vanishing solutions built from
/// Psi(b,III) = Psi(b',III) S^(l')(xi_bp) T^-1 S^(l)(xi_b)^-1 with Psi(b',III) = (s2 | s1).
SymExpr fg_cross_ratio(Signature sig, long ell, long ell_prime);

struct Detour {
    std::string symbol;  ///< soliton symbol, e.g. "Xa"
    char from = 'i';
    char to = 'j';
    long n = 0;          ///< logarithmic shift label
};

struct FramedTerm {
    SymExpr monomial;
    long shift = 0;
};

struct MalformedDetour : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// All trace words of the product of unipotent detour matrices, with net shifts.
std::vector<FramedTerm> framed_trace_terms(const std::vector<Detour>& detours,
                                           const std::string& lift_i = "XPi",
                                           const std::string& lift_j = "XPj");

/// Sum of the trace words whose net logarithmic shift vanishes.
SymExpr framed_transport(const std::vector<Detour>& detours,
                         const std::string& lift_i = "XPi",
                         const std::string& lift_j = "XPj");

}  // namespace qwkb
