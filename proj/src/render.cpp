#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "qwkb/network.hpp"

namespace qwkb {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// SVG user space: x to the right, Im w upward.
std::string pt(cplx w) { return num(w.real()) + "," + num(-w.imag()); }

const char* color(const TrajectoryLabel& l) {
    if (l.diagonal()) return "#2e8b57";
    return l.i > 0 ? "#c0392b" : "#2c6fbb";
}

cplx left_normal(cplx d) {
    double n = std::abs(d);
    return n > 0 ? cplx(0, 1) * d / n : cplx(0);
}

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }
cplx cread(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json label_json(const TrajectoryLabel& l) { return {{"i", l.i}, {"j", l.j}, {"n", l.n}}; }
TrajectoryLabel label_read(const json& j) { return {j.at("i").get<int>(), j.at("j").get<int>(), j.at("n").get<long>()}; }

SourceKind source_read(const std::string& s) {
    if (s == "branch_point") return SourceKind::branch_point;
    if (s == "puncture") return SourceKind::puncture;
    if (s == "intersection") return SourceKind::intersection;
    throw std::invalid_argument("unknown source kind " + s);
}

SignatureTag signature_read(const std::string& s) {
    if (s == "+-") return SignatureTag::pm;
    if (s == "-+") return SignatureTag::mp;
    return SignatureTag::unknown;
}

}  // namespace

std::string render_svg(const StokesGraph& g) {
    const double R = 2.5 * g.scale, stroke = R / 400, gap = R / 250;
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<!-- qwkb " << kVersion << " -->\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << num(-R) << " " << num(-R) << " " << num(2 * R) << " "
      << num(2 * R) << "\" width=\"800\" height=\"800\">\n";
    o << "<title>" << g.model << " theta=" << num(g.theta) << "</title>\n";
    o << "<rect x=\"" << num(-R) << "\" y=\"" << num(-R) << "\" width=\"" << num(2 * R) << "\" height=\"" << num(2 * R)
      << "\" fill=\"white\"/>\n";
    o << "<g class=\"axes\" stroke=\"#999\" stroke-width=\"" << num(stroke / 2) << "\">\n";
    o << "<line class=\"axis\" x1=\"" << num(-R) << "\" y1=\"0\" x2=\"" << num(R) << "\" y2=\"0\"/>\n";
    o << "<line class=\"axis\" x1=\"0\" y1=\"" << num(-R) << "\" x2=\"0\" y2=\"" << num(R) << "\"/>\n";
    o << "</g>\n";

    const std::string dash = num(4 * stroke) + "," + num(3 * stroke);
    for (const LogCut& c : g.log_cuts) {
        if (c.branch_point < 0 || c.branch_point >= static_cast<int>(g.branch_points.size())) continue;
        cplx b = g.branch_points[c.branch_point].position;
        cplx far = c.puncture == Location::origin ? cplx(0) : b * (2.0 * R / std::max(std::abs(b), 1e-300));
        cplx nrm = left_normal(far - b) * (gap / 2);
        for (double s : {1.0, -1.0})
            o << "<line class=\"log-cut\" x1=\"" << num((b + s * nrm).real()) << "\" y1=\"" << num(-(b + s * nrm).imag())
              << "\" x2=\"" << num((far + s * nrm).real()) << "\" y2=\"" << num(-(far + s * nrm).imag())
              << "\" stroke=\"#555\" stroke-width=\"" << num(stroke) << "\" stroke-dasharray=\"" << dash << "\"/>\n";
    }
    for (const SqrtCut& c : g.sqrt_cuts) {
        if (c.trajectory < 0 || c.trajectory >= static_cast<int>(g.trajectories.size())) continue;
        const auto& P = g.trajectories[c.trajectory].points;
        o << "<polyline class=\"sqrt-cut\" fill=\"none\" stroke=\"#888\" stroke-width=\"" << num(stroke / 2)
          << "\" stroke-dasharray=\"" << dash << "\" points=\"";
        for (size_t q = 0; q < P.size(); ++q) {
            cplx d = q + 1 < P.size() ? P[q + 1].w - P[q].w : (q > 0 ? P[q].w - P[q - 1].w : cplx(1));
            if (q) o << ' ';
            o << pt(P[q].w + left_normal(d) * gap);
        }
        o << "\"/>\n";
    }
    for (const Trajectory& t : g.trajectories) {
        o << "<polyline class=\"trajectory\" data-id=\"" << t.id << "\" data-label=\"" << to_string(t.label)
          << "\" data-generation=\"" << t.generation << "\" fill=\"none\" stroke=\"" << color(t.label)
          << "\" stroke-width=\"" << num(stroke) << "\" points=\"";
        for (size_t q = 0; q < t.points.size(); ++q) o << (q ? " " : "") << pt(t.points[q].w);
        o << "\"/>\n";
        if (t.ell != 0 && t.points.size() > 1) {
            cplx at = t.points[t.points.size() / 8].w;
            o << "<text class=\"ell\" x=\"" << num(at.real()) << "\" y=\"" << num(-at.imag()) << "\" font-size=\""
              << num(12 * stroke) << "\">(" << t.ell << ")</text>\n";
        }
    }
    for (const Intersection& x : g.intersections)
        o << "<circle class=\"intersection\" cx=\"" << num(x.w.real()) << "\" cy=\"" << num(-x.w.imag()) << "\" r=\""
          << num(2 * stroke) << "\" fill=\"#333\"/>\n";
    for (const BranchPoint& b : g.branch_points)
        o << "<circle class=\"branch-point\" cx=\"" << num(b.position.real()) << "\" cy=\"" << num(-b.position.imag())
          << "\" r=\"" << num(4 * stroke) << "\" fill=\"" << (b.signature == SignatureTag::mp ? "#2c6fbb" : "#c0392b")
          << "\" stroke=\"black\" stroke-width=\"" << num(stroke / 2) << "\"/>\n";
    const double a = 4 * stroke;
    o << "<path class=\"puncture\" d=\"M" << num(-a) << "," << num(-a) << " L" << num(a) << "," << num(a) << " M"
      << num(-a) << "," << num(a) << " L" << num(a) << "," << num(-a) << "\" stroke=\"black\" stroke-width=\""
      << num(stroke) << "\"/>\n";
    o << "</svg>\n";
    return o.str();
}

std::string dump_graph(const StokesGraph& g) {
    json j;
    j["format"] = "qwkb-stokes-graph";
    j["version"] = 1;
    j["model"] = g.model;
    j["cover_degree"] = g.cover_degree;
    j["theta"] = g.theta;
    j["scale"] = g.scale;
    j["branch_points"] = json::array();
    for (const BranchPoint& b : g.branch_points)
        j["branch_points"].push_back({{"w", cjson(b.position)},
                                      {"sign", b.sign_class},
                                      {"c0", cjson(b.c0)},
                                      {"signature", to_string(b.signature)},
                                      {"ell", b.enc_log_shift}});
    j["trajectories"] = json::array();
    for (const Trajectory& t : g.trajectories) {
        json pts = json::array();
        for (const TrajectoryPoint& p : t.points)
            pts.push_back(json::array({p.w.real(), p.w.imag(), p.log_i.real(), p.log_i.imag(), p.log_j.real(),
                                       p.log_j.imag(), p.mass, p.im_f}));
        j["trajectories"].push_back({{"id", t.id},
                                     {"label", label_json(t.label)},
                                     {"source", to_string(t.source)},
                                     {"parent", t.parent},
                                     {"generation", t.generation},
                                     {"ray", t.ray},
                                     {"ell", t.ell},
                                     {"lift", t.lift},
                                     {"stop", t.stop},
                                     {"capped", t.capped},
                                     {"points", pts}});
    }
    j["intersections"] = json::array();
    for (const Intersection& x : g.intersections)
        j["intersections"].push_back({{"id", x.id},
                                      {"w", cjson(x.w)},
                                      {"a", x.a},
                                      {"b", x.b},
                                      {"label_a", label_json(x.label_a)},
                                      {"label_b", label_json(x.label_b)},
                                      {"spawned", x.spawned}});
    j["log_cuts"] = json::array();
    for (const LogCut& c : g.log_cuts)
        j["log_cuts"].push_back(
            {{"puncture", to_string(c.puncture)}, {"branch_point", c.branch_point}, {"degree_k", c.degree_k}});
    j["sqrt_cuts"] = json::array();
    for (const SqrtCut& c : g.sqrt_cuts)
        j["sqrt_cuts"].push_back(
            {{"branch_point", c.branch_point}, {"trajectory", c.trajectory}, {"displacement", c.displacement}});
    j["notes"] = g.notes;
    j["warnings"] = g.warnings;
    return j.dump(1) + "\n";
}

StokesGraph read_graph(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "qwkb-stokes-graph") throw std::invalid_argument("not a qwkb graph record");
    StokesGraph g;
    g.model = j.at("model").get<std::string>();
    g.cover_degree = j.at("cover_degree").get<int>();
    g.theta = j.at("theta").get<double>();
    g.scale = j.at("scale").get<double>();
    for (const json& b : j.at("branch_points")) {
        BranchPoint bp;
        bp.position = cread(b.at("w"));
        bp.sign_class = b.at("sign").get<int>();
        bp.c0 = cread(b.at("c0"));
        bp.signature = signature_read(b.at("signature").get<std::string>());
        bp.enc_log_shift = b.at("ell").get<long>();
        g.branch_points.push_back(bp);
    }
    for (const json& t : j.at("trajectories")) {
        Trajectory tr;
        tr.id = t.at("id").get<int>();
        tr.label = label_read(t.at("label"));
        tr.source = source_read(t.at("source").get<std::string>());
        tr.parent = t.at("parent").get<int>();
        tr.generation = t.at("generation").get<int>();
        tr.ray = t.at("ray").get<int>();
        tr.ell = t.at("ell").get<long>();
        tr.lift = t.at("lift").get<long>();
        tr.stop = t.at("stop").get<std::string>();
        tr.capped = t.at("capped").get<bool>();
        for (const json& p : t.at("points")) {
            auto d = p.get<std::vector<double>>();
            if (d.size() != 8) throw std::invalid_argument("trajectory point needs 8 numbers");
            tr.points.push_back({{d[0], d[1]}, {d[2], d[3]}, {d[4], d[5]}, d[6], d[7]});
        }
        g.trajectories.push_back(std::move(tr));
    }
    for (const json& x : j.at("intersections")) {
        Intersection in;
        in.id = x.at("id").get<int>();
        in.w = cread(x.at("w"));
        in.a = x.at("a").get<int>();
        in.b = x.at("b").get<int>();
        in.label_a = label_read(x.at("label_a"));
        in.label_b = label_read(x.at("label_b"));
        in.spawned = x.at("spawned").get<std::vector<int>>();
        g.intersections.push_back(in);
    }
    for (const json& c : j.at("log_cuts")) {
        std::string p = c.at("puncture").get<std::string>();
        g.log_cuts.push_back({p == "origin" ? Location::origin : Location::infinity, c.at("branch_point").get<int>(),
                              c.at("degree_k").get<long>()});
    }
    for (const json& c : j.at("sqrt_cuts"))
        g.sqrt_cuts.push_back(
            {c.at("branch_point").get<int>(), c.at("trajectory").get<int>(), c.at("displacement").get<double>()});
    g.notes = j.at("notes").get<std::vector<std::string>>();
    g.warnings = j.at("warnings").get<std::vector<std::string>>();
    return g;
}

}  // namespace qwkb
