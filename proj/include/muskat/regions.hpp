#pragma once
/// @file regions.hpp
/// @brief Smallness hypotheses on the initial datum, the (x(l), y(l)) region
/// boundary and the classification of a datum by amplitude and slope.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "grid.hpp"

namespace muskat {

namespace detail {

inline double depth_scale(double l)
{
    if (!(l > 0.0) || !std::isfinite(l)) throw ContractError("depth l must be positive");
    return std::numbers::pi / (2.0 * l);
}

inline void check_amp_slope(double amp, double slope, double l)
{
    if (!(amp >= 0.0) || !(slope >= 0.0) || !std::isfinite(slope))
        throw ContractError("amplitude and slope must be non-negative");
    if (!(depth_scale(l) * amp < std::numbers::pi / 2))
        throw ContractError("amplitude " + std::to_string(amp) + " reaches the strip half-height");
}

}  // namespace detail

inline bool check_h3(double slope) { return slope < 1.0; }

inline bool check_h4(double amp, double slope, double l)
{
    detail::check_amp_slope(amp, slope, l);
    const double k = detail::depth_scale(l);
    return std::tan(k * amp) < slope * std::tanh(0.5 * k);
}

/// Left-hand side of the third hypothesis; with k = pi/(2l):
///   (y + |2(cos k - 2) sec^4(k/2)| y^3) k^3
///   * (1 + y (y + tan(k y/2)/tanh(k/2))) / (6 tanh(k/2)) * k^2
///   + 4 tan(k amp) - 4 y cos(2 k amp)
inline double h5_lhs(double amp, double slope, double l)
{
    const double k = detail::depth_scale(l);
    const double y = slope;
    const double th = std::tanh(0.5 * k);
    const double c = std::cos(0.5 * k);
    const double coef = std::abs(2.0 * (std::cos(k) - 2.0) / (c * c * c * c));
    const double first = (y + coef * y * y * y) * k * k * k;
    const double bracket = (1.0 + y * (y + std::tan(0.5 * k * y) / th)) / (6.0 * th) * k * k;
    return first * bracket + 4.0 * std::tan(k * amp) - 4.0 * y * std::cos(2.0 * k * amp);
}

struct H5Result {
    bool ok = false;
    double lhs = 0.0;
};

inline H5Result check_h5(double amp, double slope, double l)
{
    detail::check_amp_slope(amp, slope, l);
    const double v = h5_lhs(amp, slope, l);
    return {v < 0.0, v};
}

// ---------------------------------------------------------------------------
// Region boundary

struct SignChange {
    double x = 0.0;
    double y = 0.0;
    bool is_root = false;  // false: the sign flip comes from a pole of tan(k y/2)
    double residual = 0.0;
};

struct RegionPoint {
    double depth = 0.0;
    double x = 0.0;
    double y = 0.0;
    double residual1 = 0.0;  // tan(k x) - y tanh(k/2)
    double residual2 = 0.0;  // h5 with (amp, slope) = (x, y)
    std::vector<SignChange> sign_changes;
};

class NoRootError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double boundary_slope(double x, double k) { return std::tan(k * x) / std::tanh(0.5 * k); }

inline double boundary_function(double x, double l)
{
    return h5_lhs(x, boundary_slope(x, depth_scale(l)), l);
}

}  // namespace detail

struct RegionSearch {
    double x_min = 1e-6;
    std::size_t sweep_points = 20000;
};

/// Substitutes y = tan(k x)/tanh(k/2) into the second equation, sweeps x over
/// (x_min, wall) for sign changes, and refines each by bisection and Newton.
/// The returned point is the smallest genuine root; every flip is reported.
inline RegionPoint region_boundary(double l, const RegionSearch& search = {})
{
    const double k = detail::depth_scale(l);
    const double x_max = (std::numbers::pi / 2) / k * (1.0 - 1e-6);
    auto g = [&](double x) { return detail::boundary_function(x, l); };
    RegionPoint out;
    out.depth = l;
    bool found = false;
    std::ostringstream table;
    double xa = search.x_min;
    double ga = g(xa);
    for (std::size_t i = 1; i <= search.sweep_points; ++i) {
        const double xb = search.x_min + (x_max - search.x_min) * static_cast<double>(i) / static_cast<double>(search.sweep_points);
        const double gb = g(xb);
        if (i % (search.sweep_points / 20) == 0) table << "  x = " << xb << "  g = " << gb << '\n';
        if (std::signbit(ga) != std::signbit(gb)) {
            double lo = xa;
            double hi = xb;
            double glo = ga;
            for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = g(mid);
                if (std::signbit(gm) == std::signbit(glo)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            double x = 0.5 * (lo + hi);
            // Poles of tan(k y/2) sit at y = (2m+1) pi/k.
            const double ylo = detail::boundary_slope(xa, k);
            const double yhi = detail::boundary_slope(xb, k);
            const double m = std::ceil((0.5 * k * ylo - std::numbers::pi / 2) / std::numbers::pi);
            const double pole_y = (2.0 * m + 1.0) * std::numbers::pi / k;
            const bool pole = pole_y >= ylo && pole_y <= yhi;
            if (!pole) {
                for (int it = 0; it < 3; ++it) {
                    const double step = 1e-7 * x;
                    const double d = (g(x + step) - g(x - step)) / (2 * step);
                    const double nx = x - g(x) / d;
                    if (!(nx > lo - (hi - lo)) || !(nx < hi + (hi - lo)) || std::abs(g(nx)) > std::abs(g(x))) break;
                    x = nx;
                }
            }
            SignChange sc{x, detail::boundary_slope(x, k), !pole, g(x)};
            out.sign_changes.push_back(sc);
            if (!pole && !found) {
                found = true;
                out.x = sc.x;
                out.y = sc.y;
            }
        }
        xa = xb;
        ga = gb;
    }
    if (!found) throw NoRootError("no nontrivial root for l = " + std::to_string(l) + "; sweep:\n" + table.str());
    out.residual1 = std::tan(k * out.x) - out.y * std::tanh(0.5 * k);
    out.residual2 = h5_lhs(out.x, out.y, l);
    return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class Classification { MaxPrinciple, UniformBound, Outside };

inline const char* to_string(Classification c) noexcept
{
    switch (c) {
    case Classification::MaxPrinciple: return "MaxPrinciple";
    case Classification::UniformBound: return "UniformBound";
    case Classification::Outside: return "Outside";
    }
    return "unknown";
}

struct HypothesisReport {
    double amp = 0.0;
    double slope = 0.0;
    double depth = 0.0;
    bool h3_ok = false;
    bool h4_ok = false;
    bool h5_ok = false;
    double h5_lhs = 0.0;
    RegionPoint region_point;
    bool sisder2_ok = false;
    Classification classification = Classification::Outside;
};

inline HypothesisReport classify(double amp, double slope, double l, const RegionPoint& boundary)
{
    HypothesisReport r;
    r.amp = amp;
    r.slope = slope;
    r.depth = l;
    r.h3_ok = check_h3(slope);
    r.h4_ok = check_h4(amp, slope, l);
    const H5Result h5 = check_h5(amp, slope, l);
    r.h5_ok = h5.ok;
    r.h5_lhs = h5.lhs;
    r.region_point = boundary;
    r.sisder2_ok = amp < boundary.x && slope < boundary.y;
    if (r.h3_ok && r.h4_ok && r.h5_ok)
        r.classification = Classification::MaxPrinciple;
    else if (r.sisder2_ok)
        r.classification = Classification::UniformBound;
    else
        r.classification = Classification::Outside;
    return r;
}

inline HypothesisReport classify(double amp, double slope, double l)
{
    return classify(amp, slope, l, region_boundary(l));
}

/// Classification of a sampled datum by its sup norm and maximal slope.
inline HypothesisReport classify(const GridProfile& f0, double l)
{
    return classify(sup_norm(f0), slope_sup_norm(f0), l);
}

}  // namespace muskat
