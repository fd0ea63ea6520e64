#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qwkb/curve.hpp"

namespace qwkb {

/// (i, j, n): the line where Im[e^{-i theta} int (lambda_{j,n} - lambda_{i,0})] = 0, sheets +1 / -1.
struct TrajectoryLabel {
    int i = 1;
    int j = -1;
    long n = 0;

    /// Throws std::invalid_argument for (i, i, 0) or sheets outside {+1, -1}.
    void validate() const;
    bool diagonal() const { return i == j; }
};
std::string to_string(const TrajectoryLabel& l);
bool operator==(const TrajectoryLabel& a, const TrajectoryLabel& b);

enum class SourceKind { branch_point, puncture, intersection };
std::string to_string(SourceKind k);

struct TrajectoryPoint {
    cplx w;
    cplx log_i;  ///< tracked log y on sheet i (unused on diagonal lines)
    cplx log_j;
    double mass = 0;  ///< Re[e^{-i theta} F], F = int Delta dx/x from the source
    double im_f = 0;  ///< Im[e^{-i theta} F] after projection
};

struct Trajectory {
    int id = 0;
    TrajectoryLabel label;
    SourceKind source = SourceKind::branch_point;
    int parent = -1;  ///< branch-point index, log-cut index, or intersection id
    int generation = 0;
    int ray = 0;     ///< 0..2 at a branch point, counterclockwise from the arrival direction of its log cut
    long ell = 0;    ///< S^(ell) label of a primary line
    long lift = 0;   ///< Delta = log y_j - log y_i + 2 pi i lift along the tracked branches
    std::string stop;  ///< mass, radius, puncture, branch_point, steps, stiff
    bool capped = false;  ///< stopped by a cap rather than by the geometry
    std::vector<TrajectoryPoint> points;
};

struct Intersection {
    int id = 0;
    cplx w;
    int a = -1, b = -1;  ///< incoming trajectory ids, a < b
    TrajectoryLabel label_a, label_b;
    std::vector<int> spawned;
};

struct LogCut {
    Location puncture = Location::origin;
    int branch_point = -1;
    long degree_k = 0;
};

/// Square-root cut drawn along a primary line, rotated counterclockwise about its branch point.
struct SqrtCut {
    int branch_point = -1;
    int trajectory = -1;
    double displacement = 0.05;
};

struct Caps {
    int max_generation = 1;
    long max_abs_n = 2;
    double max_mass = 60.0;
    double stop_radius = 1e-4;  ///< relative to the coordinate scale
    double max_radius = 1e3;    ///< relative to the coordinate scale
    int max_steps = 20000;
    bool spirals = true;
};

struct StokesGraph {
    std::string model;
    int cover_degree = 1;
    double theta = 0;
    double scale = 1;
    std::vector<BranchPoint> branch_points;
    std::vector<Trajectory> trajectories;
    std::vector<Intersection> intersections;
    std::vector<LogCut> log_cuts;
    std::vector<SqrtCut> sqrt_cuts;
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
};

struct StiffRegion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Max |w| over branch points (1 when there are none).
double coordinate_scale(const std::vector<BranchPoint>& bps);

/// Branch points with signature and enc_log_shift filled in, plus the log cuts that fix them.
std::vector<BranchPoint> decorated_branch_points(const QdeModel& m, double theta, std::vector<LogCut>* cuts = nullptr);

/// The three primary lines of one branch point, in ray order.
std::vector<Trajectory> primary_lines(const QdeModel& m, double theta, int bp_index, const Caps& caps = {});

/// Line of Delta = (log y_j + 2 pi i n_j) - (log y_i + 2 pi i n_i) through start; diagonal lines ignore the sheets.
/// The integer difference n_j - n_i is formed first, so equal shifts of both indices cancel exactly.
Trajectory trace_line(const QdeModel& m, double theta, cplx start, int i, int j, long n_i, long n_j,
                      const Caps& caps = {});

/// Labels born where lines a and b cross: (ij,n) x (ji,m) gives (ij,n+kN), (ji,m+kN), (ii,(k+1)N) with N = n+m;
/// (ij,n) x (ll,m) gives (ij,n+km); same-type and diagonal pairs give nothing. k <= max_generation, |n| <= max_abs_n.
std::vector<TrajectoryLabel> spawn_rule(const TrajectoryLabel& a, const TrajectoryLabel& b, const Caps& caps);

StokesGraph build_graph(const QdeModel& m, double theta, const Caps& caps = {}, bool parallel = true);

struct Saddle {
    double theta = 0;
    int from = -1;  ///< branch point emitting the line
    int to = -1;    ///< branch point it reaches (equal to from for a loop around a puncture)
    int ray = 0;
    double miss = 0;
};

/// Phases in [a, b] where a primary line reaches a branch point with vanishing Delta;
/// located by sign changes of the signed miss on a grid of steps+1 phases, then bisection.
std::vector<Saddle> find_saddles(const QdeModel& m, double a, double b, int steps, const Caps& caps = {},
                                 bool parallel = true);

/// Max relative radial deviation of the (++, n) line through w0 over one turn at phase theta.
double d0_circle_deviation(const QdeModel& m, cplx w0, long n, double theta = 0.0);

/// Deterministic SVG: lines colored by label class, cuts dashed, branch points and punctures marked.
std::string render_svg(const StokesGraph& g);

/// JSON record with every vertex; doubles are written in shortest round-trip form.
std::string dump_graph(const StokesGraph& g);
StokesGraph read_graph(const std::string& text);

}  // namespace qwkb
