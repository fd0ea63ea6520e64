#pragma once

#include <stdexcept>
#include <vector>

#include "qwkb/curve.hpp"

namespace qwkb {

struct BranchTrackingLost : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContourClearance : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EndpointSingularityUnresolved : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A loop in the x-plane, or a polyline in the cover coordinate w whose ends may be branch points.
struct ContourSpec {
    enum class Kind { loop, segment };
    Kind kind = Kind::loop;
    cplx center{0.0, 0.0};
    double radius = 0.5;
    int winding = 1;
    double start_angle = 0.0;
    std::vector<cplx> waypoints;  ///< segment: w_a, via..., w_b
    double clearance = 1e-3;

    static ContourSpec loop(cplx center, double radius, int winding = 1, double start_angle = 0.0);
    static ContourSpec segment(std::vector<cplx> waypoints);
};

/// oint (log y_sign + 2 pi i n) dx/x with log y continued along the loop from its principal value at the start.
cplx contour_period(const QdeModel& m, const ContourSpec& spec, int sign, long n);

/// Coefficients hbar^{-1} .. hbar^{N-1}: the leading period, then oint D_n dx/x for n = 1..N.
std::vector<cplx> period_series(const QdeModel& m, const ContourSpec& spec, int sign, int N);

struct LiftRule {
    enum class Kind { closing, explicit_shift };
    Kind kind = Kind::closing;
    long shift = 0;
};

struct VorosResult {
    cplx exponent;     ///< int (log y_s - log y_-s + 2 pi i shift) dx/x at hbar = 1
    long shift = 0;    ///< log shift actually inserted
    cplx start_value;  ///< integrand numerator at the two ends; both vanish for a closed lift
    cplx end_value;
    bool closes = false;
};

/// Sheets are principal at the middle of the polyline and continued to both ends.
/// closing picks the shift that makes the integrand vanish at the first endpoint.
VorosResult voros_leading(const QdeModel& m, const ContourSpec& spec, int sign, LiftRule lift = {});

}  // namespace qwkb
