#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qwkb/curve.hpp"
#include "qwkb/stokesalg.hpp"
#include "qwkb/symexpr.hpp"

namespace qwkb {

struct NamedPath {
    std::string word;
    TraceMode mode = TraceMode::xi_graded;
    SymExpr expected_trace;
    std::optional<Mat2> expected_matrix;
    /// Optional charge-variable form of the regularized trace.
    std::optional<SymExpr> expected_charges;
    std::string note;
};

struct ModelBundle {
    QdeModel model;
    std::map<std::string, NamedPath> paths;
    /// charge symbol -> monomial in Voros symbols and anchor constants
    std::map<std::string, SymExpr> charge_dictionary;
    /// human-readable numeric identifications, e.g. "Y^2 = -exp(-pi^2/hbar)"
    std::vector<std::string> identifications;
};

struct DegenerateModuli : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IncompleteAssignment : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnrepresentableTerm : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Params = std::map<std::string, QI>;

/// Raw models without moduli checks.
QdeModel qairy_model();
QdeModel qairy_kappa_model(const QI& kappa);
QdeModel qhyper_model(const QI& Q);
QdeModel qmathieu_model(const QI& kappa, const QI& tau);
QdeModel qramanujan_model();

/// Names accepted by builtin().
std::vector<std::string> builtin_names();

/// Fully wired bundle; unspecified parameters take the documented defaults.
ModelBundle builtin(const std::string& name, const Params& params = {});

/// Reads a model file (JSON object with keys name, cover_degree, parameters, T,
/// and optionally sheet_anchor, log_cut_pairs); unknown keys are rejected.
QdeModel load_model_file(const std::string& path);
QdeModel parse_model_json(const std::string& text);

/// Builtin name (optionally "name:key=value,...") or a model file path.
ModelBundle resolve_model(const std::string& spec);

/// Rewrites each term as a product of charge variables by an exact lattice solve over Q.
/// Charges listed first are preferred as pivots; redundant charges get exponent 0.
SymExpr charge_map(const SymExpr& e, const std::map<std::string, SymExpr>& dictionary,
                   const std::vector<std::string>& order = {});

/// Regularized trace of a named path of the bundle.
SymExpr path_trace(const ModelBundle& b, const std::string& path);

}  // namespace qwkb
