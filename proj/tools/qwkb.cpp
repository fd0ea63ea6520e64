#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qwkb/acceptance.hpp"
#include "qwkb/models.hpp"
#include "qwkb/network.hpp"
#include "qwkb/periods.hpp"
#include "qwkb/series.hpp"
#include "qwkb/stokesalg.hpp"

using namespace qwkb;
using nlohmann::json;

namespace {

// Errors caused by the invocation rather than the numerics; they exit with status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Output {
    bool records = false;

    void line(const std::string& s) const { std::cout << s << "\n"; }
    void record(const json& j) const { std::cout << j.dump() << "\n"; }
};

std::string fmt(double v, int digits = 12) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string fmt(cplx z, int digits = 12) {
    std::string re = fmt(z.real(), digits), im = fmt(std::abs(z.imag()), digits);
    return re + (z.imag() < 0 || std::signbit(z.imag()) ? " - " : " + ") + im + "i";
}

json cj(cplx z) { return json::array({z.real(), z.imag()}); }

// Builtin name, "name:key=value,...", a model file, or a file found on QWKB_MODEL_PATH.
ModelBundle load(const std::string& spec) {
    const std::string base = spec.substr(0, spec.find(':'));
    const auto names = builtin_names();
    bool builtin_name = std::find(names.begin(), names.end(), base) != names.end();
    if (builtin_name || std::filesystem::exists(spec)) {
        try {
            return resolve_model(spec);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        } catch (const DegenerateModuli& e) {
            throw UsageError(e.what());
        }
    }
    if (const char* path = std::getenv("QWKB_MODEL_PATH")) {
        std::stringstream dirs(path);
        for (std::string dir; std::getline(dirs, dir, ':');) {
            if (dir.empty()) continue;
            for (const std::string& cand : {spec, spec + ".json"}) {
                auto p = std::filesystem::path(dir) / cand;
                if (std::filesystem::exists(p)) return resolve_model(p.string());
            }
        }
    }
    throw UsageError("unknown model '" + spec + "': not a builtin, a file, or on QWKB_MODEL_PATH");
}

std::pair<double, double> parse_range(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw UsageError("--range expects a,b");
    try {
        double a = std::stod(s.substr(0, comma)), b = std::stod(s.substr(comma + 1));
        if (!(a < b)) throw UsageError("--range needs a < b");
        return {a, b};
    } catch (const std::logic_error&) {
        throw UsageError("--range expects two numbers a,b");
    }
}

cplx parse_point(const std::string& s) {
    try {
        auto comma = s.find(',');
        if (comma == std::string::npos) return {std::stod(s), 0.0};
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::logic_error&) {
        throw UsageError("point '" + s + "' is not re or re,im");
    }
}

int parse_sign(const std::string& s) {
    if (s == "+" || s == "+1" || s == "1") return 1;
    if (s == "-" || s == "-1") return -1;
    throw UsageError("--sign expects + or -");
}

std::string sheet(int s) { return s > 0 ? "+" : "-"; }

// ---- subcommands ----

int cmd_curve(const Output& out, const std::string& model, bool want_bp, bool want_punct) {
    ModelBundle b = load(model);
    const QdeModel& m = b.model;
    if (!want_bp && !want_punct) want_bp = want_punct = true;
    if (!out.records) {
        out.line("model " + m.name + " cover_degree " + std::to_string(m.cover_degree));
        out.line("T0 = " + to_string(m.T0(), "w"));
    } else {
        out.record({{"model", m.name}, {"cover_degree", m.cover_degree}, {"T0", to_string(m.T0(), "w")}});
    }
    if (want_bp) {
        auto bps = decorated_branch_points(m, 0.0);
        for (size_t k = 0; k < bps.size(); ++k) {
            const BranchPoint& p = bps[k];
            if (out.records)
                out.record({{"branch_point", k},
                            {"w", cj(p.position)},
                            {"x", cj(m.x_of(p.position))},
                            {"T0", p.sign_class},
                            {"signature", to_string(p.signature)},
                            {"ell", p.enc_log_shift}});
            else
                out.line("branch_point " + std::to_string(k) + " w = " + fmt(p.position) + "  T0 = " +
                         std::to_string(p.sign_class) + "  signature " + to_string(p.signature) + "  ell " +
                         std::to_string(p.enc_log_shift));
        }
    }
    if (want_punct) {
        for (const Puncture& p : classify_punctures(m)) {
            if (out.records)
                out.record({{"puncture", to_string(p.location)},
                            {"x", cj(p.x_star)},
                            {"kind", to_string(p.kind)},
                            {"degree_k", p.degree_k},
                            {"mu", cj(p.mu)}});
            else
                out.line("puncture " + to_string(p.location) + " kind " + to_string(p.kind) + " k = " +
                         std::to_string(p.degree_k) +
                         (p.kind == PunctureKind::regular ? "  mu = " + fmt(p.mu) : std::string()));
        }
    }
    return 0;
}

int cmd_series(const Output& out, const std::string& model, const std::string& sign_s, int order, bool verify,
               const std::vector<std::string>& points) {
    if (order < 0) throw UsageError("--order must be >= 0");
    ModelBundle b = load(model);
    const int sign = parse_sign(sign_s);
    SeriesRing<QI> ring(b.model);
    auto s = riccati_coeffs(ring, b.model, sign, order);
    for (int n = 0; n <= order; ++n) {
        std::string c = ring.str(s.coeffs[n]);
        if (out.records)
            out.record({{"coefficient", "R"}, {"order", n}, {"value", c}});
        else
            out.line("R_" + std::to_string(n) + " = " + c);
    }
    if (!verify) return 0;
    std::vector<cplx> pts;
    for (const auto& p : points) pts.push_back(parse_point(p));
    if (pts.empty()) pts = {cplx(0.3, 0.7), cplx(1.7, -0.4), cplx(-2.1, 0.9)};
    VerifyReport rep = verify_riccati(ring, s, pts);
    if (out.records) {
        out.record({{"verify", true},
                    {"symbolic_zero", rep.symbolic_zero},
                    {"max_residual", rep.max_residual},
                    {"per_point", rep.per_point}});
    } else {
        out.line(std::string("verify: ") + (rep.symbolic_zero ? "symbolic zero" : "numeric") +
                 ", max residual " + fmt(rep.max_residual, 3));
    }
    return 0;
}

int cmd_trace(const Output& out, const std::string& model, double theta, const Caps& caps, const std::string& svg,
              const std::string& dump) {
    ModelBundle b = load(model);
    StokesGraph g = build_graph(b.model, theta, caps);
    if (!svg.empty()) {
        std::ofstream f(svg, std::ios::binary);
        if (!f) throw UsageError("cannot write " + svg);
        f << render_svg(g);
    }
    if (!dump.empty()) {
        std::ofstream f(dump, std::ios::binary);
        if (!f) throw UsageError("cannot write " + dump);
        f << dump_graph(g);
    }
    int primaries = 0;
    for (const Trajectory& t : g.trajectories) primaries += t.source == SourceKind::branch_point;
    if (out.records) {
        out.record({{"model", g.model},
                    {"theta", g.theta},
                    {"branch_points", g.branch_points.size()},
                    {"primary_lines", primaries},
                    {"trajectories", g.trajectories.size()},
                    {"intersections", g.intersections.size()},
                    {"notes", g.notes},
                    {"warnings", g.warnings}});
        for (const Trajectory& t : g.trajectories)
            out.record({{"id", t.id},
                        {"label", to_string(t.label)},
                        {"source", to_string(t.source)},
                        {"parent", t.parent},
                        {"generation", t.generation},
                        {"ell", t.ell},
                        {"stop", t.stop},
                        {"mass", t.points.empty() ? 0.0 : t.points.back().mass},
                        {"points", t.points.size()}});
        return 0;
    }
    out.line("model " + g.model + " theta " + fmt(g.theta));
    out.line("branch points " + std::to_string(g.branch_points.size()) + ", primary lines " + std::to_string(primaries) +
             ", trajectories " + std::to_string(g.trajectories.size()) + ", intersections " +
             std::to_string(g.intersections.size()));
    for (size_t k = 0; k < g.branch_points.size(); ++k)
        out.line("  bp " + std::to_string(k) + " w = " + fmt(g.branch_points[k].position, 8) + "  signature " +
                 to_string(g.branch_points[k].signature) + "  ell " + std::to_string(g.branch_points[k].enc_log_shift));
    for (const Trajectory& t : g.trajectories) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "  %4d %-9s %-12s parent %3d gen %d ell %3ld stop %-12s mass %10.5f", t.id,
                      to_string(t.label).c_str(), to_string(t.source).c_str(), t.parent, t.generation, t.ell,
                      t.stop.c_str(), t.points.empty() ? 0.0 : t.points.back().mass);
        out.line(buf);
    }
    for (const auto& n : g.notes) out.line("note: " + n);
    for (const auto& w : g.warnings) out.line("warning: " + w);
    return 0;
}

int cmd_saddles(const Output& out, const std::string& model, const std::string& range, int steps) {
    if (steps < 1) throw UsageError("--steps must be >= 1");
    auto [a, b] = parse_range(range);
    ModelBundle bundle = load(model);
    auto s = find_saddles(bundle.model, a, b, steps);
    for (const Saddle& x : s) {
        if (out.records)
            out.record({{"theta", x.theta}, {"from", x.from}, {"to", x.to}, {"ray", x.ray}, {"miss", x.miss}});
        else
            out.line("saddle theta " + fmt(x.theta, 10) + "  from " + std::to_string(x.from) + " ray " +
                     std::to_string(x.ray) + " to " + std::to_string(x.to) + "  miss " + fmt(x.miss, 3));
    }
    if (!out.records) out.line(std::to_string(s.size()) + " saddle line(s) in [" + fmt(a) + ", " + fmt(b) + "]");
    return 0;
}

int cmd_monodromy(const Output& out, const std::string& model, const std::string& path, const std::string& mode_s) {
    ModelBundle b = load(model);
    const NamedPath* named = b.paths.count(path) ? &b.paths.at(path) : nullptr;
    TraceMode mode = named ? named->mode : TraceMode::xi_graded;
    if (!mode_s.empty()) {
        try {
            mode = parse_trace_mode(mode_s);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    PathWord word;
    try {
        word = parse_word(named ? named->word : path);
    } catch (const WordError& e) {
        throw UsageError(std::string("bad path word: ") + e.what());
    }
    Mat2 m = compose_path(word);
    SymExpr tr = regularized_trace(m, mode);
    std::optional<SymExpr> charges;
    if (named && named->expected_charges && !b.charge_dictionary.empty())
        charges = charge_map(mode == TraceMode::xi_graded ? anchor_rewrite(tr) : tr, b.charge_dictionary);
    if (out.records) {
        json j = {{"model", b.model.name},
                  {"word", to_string(word)},
                  {"mode", to_string(mode)},
                  {"matrix", {to_string(m.a), to_string(m.b), to_string(m.c), to_string(m.d)}},
                  {"trace", to_string(tr)}};
        if (charges) j["charges"] = to_string(*charges);
        if (named) j["matches_expected"] = tr == named->expected_trace;
        out.record(j);
        return 0;
    }
    out.line("word: " + to_string(word));
    out.line("mode: " + to_string(mode));
    out.line("matrix: " + to_string(m));
    out.line("trace: " + to_string(tr));
    if (charges) out.line("charges: " + to_string(*charges));
    if (named) out.line(std::string("expected: ") + (tr == named->expected_trace ? "match" : "MISMATCH"));
    for (const auto& id : b.identifications) out.line("identification: " + id);
    return 0;
}

int cmd_period(const Output& out, const std::string& model, const std::string& loop, double radius,
               const std::string& sign_s, long n, int order) {
    ModelBundle b = load(model);
    const int sign = parse_sign(sign_s);
    cplx center = parse_point(loop);
    if (radius <= 0) {
        // half the distance to the nearest branch point in the x-plane
        double d = INFINITY;
        for (const BranchPoint& p : branch_points(b.model)) d = std::min(d, std::abs(b.model.x_of(p.position) - center));
        radius = std::isfinite(d) ? d / 2 : 0.5;
    }
    ContourSpec spec = ContourSpec::loop(center, radius);
    std::vector<cplx> coeffs;
    if (order > 0) {
        if (n != 0) throw UsageError("--order needs --n 0");
        coeffs = period_series(b.model, spec, sign, order);
    } else {
        coeffs = {contour_period(b.model, spec, sign, n)};
    }
    if (out.records) {
        json j = {{"model", b.model.name}, {"center", cj(center)}, {"radius", radius}, {"sign", sheet(sign)}, {"n", n}};
        json c = json::array();
        for (cplx z : coeffs) c.push_back(cj(z));
        j["hbar_powers_from"] = -1;
        j["coefficients"] = c;
        out.record(j);
        return 0;
    }
    out.line("loop center " + fmt(center) + " radius " + fmt(radius) + " sign " + sheet(sign) + " n " +
             std::to_string(n));
    out.line("exponent (hbar = 1): " + fmt(coeffs[0]));
    for (size_t k = 1; k < coeffs.size(); ++k)
        out.line("hbar^" + std::to_string(k - 1) + ": " + fmt(coeffs[k]));
    return 0;
}

int cmd_models(const Output& out) {
    for (const std::string& name : builtin_names()) {
        ModelBundle b = builtin(name);
        std::vector<std::string> paths, params;
        for (const auto& [k, v] : b.paths) paths.push_back(k);
        for (const auto& [k, v] : b.model.parameters) params.push_back(k + "=" + to_string(v));
        if (out.records) {
            out.record({{"model", name}, {"cover_degree", b.model.cover_degree}, {"parameters", params}, {"paths", paths}});
            continue;
        }
        std::string line = name + "  cover " + std::to_string(b.model.cover_degree);
        for (const auto& p : params) line += "  " + p;
        if (!paths.empty()) {
            line += "  paths:";
            for (const auto& p : paths) line += " " + p;
        }
        out.line(line);
    }
    return 0;
}

int cmd_verify(const Output& out, const std::string& model, const std::vector<int>& only) {
    if (!model.empty()) {
        const auto names = builtin_names();
        if (std::find(names.begin(), names.end(), model) == names.end())
            throw UsageError("verify --model takes a builtin name");
    }
    for (int id : only)
        if (id < 1 || id > acceptance_count()) throw UsageError("--only takes criteria 1.." + std::to_string(acceptance_count()));
    auto res = run_acceptance(only, model);
    std::cout << format_acceptance(res, out.records);
    bool ok = std::all_of(res.begin(), res.end(), [](const CriterionResult& r) { return r.pass; });
    return ok ? 0 : 1;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const BranchTrackingLost*>(&e)) return "BranchTrackingLost";
    if (dynamic_cast<const ContourClearance*>(&e)) return "ContourClearance";
    if (dynamic_cast<const EndpointSingularityUnresolved*>(&e)) return "EndpointSingularityUnresolved";
    if (dynamic_cast<const ResidualTooLarge*>(&e)) return "ResidualTooLarge";
    if (dynamic_cast<const StiffRegion*>(&e)) return "StiffRegion";
    if (dynamic_cast<const NonInvertibleToken*>(&e)) return "NonInvertibleToken";
    if (dynamic_cast<const UnrepresentableTerm*>(&e)) return "UnrepresentableTerm";
    return "NumericError";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qwkb: exact WKB analysis of second-order q-difference equations"};
    app.require_subcommand(1);
    std::string format = "text";
    int threads = 0;
    app.add_option("--format", format, "text or records (one JSON object per line)")
        ->check(CLI::IsMember({"text", "records"}));
    app.add_option("--threads", threads, "OpenMP worker count (default QWKB_THREADS, else the runtime default)")
        ->check(CLI::NonNegativeNumber);

    std::string model;
    auto* curve = app.add_subcommand("curve", "Classical curve: branch points and punctures");
    bool want_bp = false, want_punct = false;
    curve->add_option("--model", model, "builtin[:k=v,...] or model file")->required();
    curve->add_flag("--branch-points", want_bp);
    curve->add_flag("--punctures", want_punct);

    auto* series = app.add_subcommand("series", "q-Riccati WKB coefficients R_0..R_N");
    std::string sign = "+";
    int order = 4;
    bool verify_flag = false;
    std::vector<std::string> points;
    series->add_option("--model", model)->required();
    series->add_option("--sign", sign, "+ or -");
    series->add_option("--order", order);
    series->add_flag("--verify", verify_flag, "substitute back at sample points");
    series->add_option("--points", points, "sample x as re or re,im (repeatable)");

    auto* trace = app.add_subcommand("trace", "Stokes graph at a phase");
    double theta = 0;
    Caps caps;
    std::string svg, dump;
    trace->add_option("--model", model)->required();
    trace->add_option("--theta", theta)->required();
    trace->add_option("--gen", caps.max_generation, "spawning generations")->check(CLI::NonNegativeNumber);
    trace->add_option("--nmax", caps.max_abs_n, "largest |n| of a spawned label")->check(CLI::NonNegativeNumber);
    trace->add_option("--mass", caps.max_mass, "mass cap")->check(CLI::PositiveNumber);
    trace->add_option("--svg", svg, "write an SVG picture");
    trace->add_option("--dump", dump, "write the full graph record");

    auto* saddles = app.add_subcommand("saddles", "Critical phases where a line joins branch points");
    std::string range = "-1.5707963267948966,1.5707963267948966";
    int steps = 64;
    saddles->add_option("--model", model)->required();
    saddles->add_option("--range", range, "a,b");
    saddles->add_option("--steps", steps);

    auto* mono = app.add_subcommand("monodromy", "Symbolic monodromy of a path word");
    std::string path, mode;
    mono->add_option("--model", model)->required();
    mono->add_option("--path", path, "named path or word string")->required();
    mono->add_option("--mode", mode, "xi_graded or drop_all_xi");

    auto* period = app.add_subcommand("period", "Leading period around a loop, optionally with hbar corrections");
    std::string loop = "0";
    double radius = 0;
    long n = 0;
    int porder = 0;
    period->add_option("--model", model)->required();
    period->add_option("--loop", loop, "loop center in x (re or re,im)");
    period->add_option("--radius", radius, "loop radius (default: half the distance to the nearest branch point)");
    period->add_option("--sign", sign, "+ or -");
    period->add_option("--n", n, "logarithmic index");
    period->add_option("--order", porder, "number of D_n corrections")->check(CLI::NonNegativeNumber);

    auto* models = app.add_subcommand("models", "Builtin models");
    models->require_subcommand(1);
    models->add_subcommand("list", "List builtin models, parameters and named paths");

    auto* verify = app.add_subcommand("verify", "Acceptance oracles");
    std::string vmodel;
    std::vector<int> only;
    verify->add_option("--model", vmodel, "run only the oracles of this builtin");
    verify->add_option("--only", only, "criterion numbers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (threads == 0)
        if (const char* env = std::getenv("QWKB_THREADS")) threads = std::atoi(env);
    if (threads > 0) omp_set_num_threads(threads);

    Output out{format == "records"};
    try {
        if (*curve) return cmd_curve(out, model, want_bp, want_punct);
        if (*series) return cmd_series(out, model, sign, order, verify_flag, points);
        if (*trace) return cmd_trace(out, model, theta, caps, svg, dump);
        if (*saddles) return cmd_saddles(out, model, range, steps);
        if (*mono) return cmd_monodromy(out, model, path, mode);
        if (*period) return cmd_period(out, model, loop, radius, sign, n, porder);
        if (*models) return cmd_models(out);
        if (*verify) return cmd_verify(out, vmodel, only);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 2;
}
