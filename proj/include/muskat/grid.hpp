#pragma once
/// @file grid.hpp
/// @brief Uniform periodic grid, sampled interface profiles, discrete norms
/// and the mollified initial datum.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace muskat {

/// Raised when a configuration or argument violates a documented contract.
class ContractError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Uniform grid on [-L, L) with periodic wraparound.
struct Grid {
    double half_width = 1.0;
    std::size_t point_count = 16;
    double spacing = 0.125;

    [[nodiscard]] double node(std::size_t j) const noexcept
    {
        return -half_width + static_cast<double>(j) * spacing;
    }
    [[nodiscard]] std::size_t size() const noexcept { return point_count; }
    [[nodiscard]] double length() const noexcept { return 2.0 * half_width; }
    [[nodiscard]] std::size_t wrap(std::ptrdiff_t j) const noexcept
    {
        const auto n = static_cast<std::ptrdiff_t>(point_count);
        const std::ptrdiff_t r = j % n;
        return static_cast<std::size_t>(r < 0 ? r + n : r);
    }
};

inline Grid make_grid(double half_width, std::size_t point_count)
{
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw ContractError("grid half width must be positive, got " + std::to_string(half_width));
    if (point_count % 2 != 0)
        throw ContractError("odd point count " + std::to_string(point_count));
    if (point_count < 16)
        throw ContractError("point count must be at least 16, got " + std::to_string(point_count));
    return Grid{half_width, point_count, 2.0 * half_width / static_cast<double>(point_count)};
}

/// Four-point Catmull-Rom weights for the stencil (i-1, i, i+1, i+2) at local
/// coordinate t in [0, 1). The interpolant is C^1 and its derivative at a node
/// equals the centered difference there.
struct CubicWeights {
    std::array<double, 4> value;
    std::array<double, 4> slope;  // d/dt, divide by h for d/dx
};

inline CubicWeights catmull_rom_weights(double t) noexcept
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const double d00 = 6 * t2 - 6 * t;
    const double d10 = 3 * t2 - 4 * t + 1;
    const double d01 = -6 * t2 + 6 * t;
    const double d11 = 3 * t2 - 2 * t;
    return {{-0.5 * h10, h00 - 0.5 * h11, h01 + 0.5 * h10, 0.5 * h11},
            {-0.5 * d10, d00 - 0.5 * d11, d01 + 0.5 * d10, 0.5 * d11}};
}

/// Position of x_j + shift in index space, split into a base index offset
/// (relative to j) and a fractional part. Depends only on the shift, so
/// every node sees the same stencil.
struct ShiftStencil {
    std::ptrdiff_t base = 0;  // stencil starts at j + base - 1
    CubicWeights weights{};
    double frac = 0.0;             // t in [0, 1)
    double frac_complement = 1.0;  // 1 - t, exact when the shift is in (-h, 0)
};

inline ShiftStencil shift_stencil(double shift, double spacing) noexcept
{
    const double u = shift / spacing;
    const double fl = std::floor(u);
    const double t = u - fl;
    return {static_cast<std::ptrdiff_t>(fl), catmull_rom_weights(t), t, fl == -1.0 ? -u : 1.0 - t};
}

/// Deviations of the Catmull-Rom weights from the unit vector at the stencil's
/// second node, as polynomials in t without constant term.
inline std::array<double, 4> catmull_rom_deviation(double t) noexcept
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {-0.5 * (t3 - 2 * t2 + t), -2.5 * t2 + 1.5 * t3, (-2 * t3 + 3 * t2) + 0.5 * (t3 - 2 * t2 + t),
            0.5 * (t3 - t2)};
}

/// Interface height sampled on a grid.
struct GridProfile {
    Grid grid;
    std::vector<double> values;

    GridProfile() = default;
    GridProfile(Grid g, std::vector<double> v) : grid(g), values(std::move(v))
    {
        if (values.size() != grid.size())
            throw ContractError("profile size does not match grid");
    }
    explicit GridProfile(Grid g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t j) const noexcept { return values[j]; }
    [[nodiscard]] double& operator[](std::size_t j) noexcept { return values[j]; }
    [[nodiscard]] double at_wrapped(std::ptrdiff_t j) const noexcept { return values[grid.wrap(j)]; }

    /// Periodic cubic interpolant at x_j + shift.
    [[nodiscard]] double sample(std::size_t j, const ShiftStencil& s) const noexcept
    {
        const auto b = static_cast<std::ptrdiff_t>(j) + s.base - 1;
        double acc = 0.0;
        for (std::size_t r = 0; r < 4; ++r)
            acc += s.weights.value[r] * at_wrapped(b + static_cast<std::ptrdiff_t>(r));
        return acc;
    }
    /// d/dx of the periodic cubic interpolant at x_j + shift.
    [[nodiscard]] double sample_slope(std::size_t j, const ShiftStencil& s) const noexcept
    {
        const auto b = static_cast<std::ptrdiff_t>(j) + s.base - 1;
        double acc = 0.0;
        for (std::size_t r = 0; r < 4; ++r)
            acc += s.weights.slope[r] * at_wrapped(b + static_cast<std::ptrdiff_t>(r));
        return acc / grid.spacing;
    }
    /// sample(j, s) - f_j, computed without cancellation when |shift| < h.
    [[nodiscard]] double sample_delta(std::size_t j, const ShiftStencil& s) const noexcept
    {
        const auto i = static_cast<std::ptrdiff_t>(j);
        if (s.base == 0) {
            const auto d = catmull_rom_deviation(s.frac);
            return d[0] * at_wrapped(i - 1) + d[1] * values[j] + d[2] * at_wrapped(i + 1) + d[3] * at_wrapped(i + 2);
        }
        if (s.base == -1) {
            const auto d = catmull_rom_deviation(s.frac_complement);
            return d[3] * at_wrapped(i - 2) + d[2] * at_wrapped(i - 1) + d[1] * values[j] + d[0] * at_wrapped(i + 1);
        }
        return sample(j, s) - values[j];
    }
    [[nodiscard]] double value_at_offset(std::size_t j, double shift) const noexcept
    {
        return sample(j, shift_stencil(shift, grid.spacing));
    }

    /// Centered second-order difference of the given order (0..4) at node j.
    [[nodiscard]] double centered_difference(std::size_t j, int order) const
    {
        const auto i = static_cast<std::ptrdiff_t>(j);
        const double h = grid.spacing;
        auto f = [&](std::ptrdiff_t d) { return at_wrapped(i + d); };
        switch (order) {
        case 0: return f(0);
        case 1: return (f(1) - f(-1)) / (2 * h);
        case 2: return (f(1) - 2 * f(0) + f(-1)) / (h * h);
        case 3: return (f(2) - 2 * f(1) + 2 * f(-1) - f(-2)) / (2 * h * h * h);
        case 4: return (f(2) - 4 * f(1) + 6 * f(0) - 4 * f(-1) + f(-2)) / (h * h * h * h);
        default: throw ContractError("centered difference order must be in 0..4");
        }
    }
    [[nodiscard]] double slope(std::size_t j) const { return centered_difference(j, 1); }
};

/// Periodic C^2 cubic spline through a profile. Second derivatives come from
/// the closed-form inverse of the (1, 4, 1) circulant, truncated where
/// (2 - sqrt 3)^d drops below 1e-20.
class PeriodicSpline {
  public:
    explicit PeriodicSpline(const GridProfile& f) : f_(f), m_(f.size(), 0.0)
    {
        const double r = 2.0 - std::sqrt(3.0);
        const double amp = 1.0 / (2.0 * std::sqrt(3.0));
        constexpr std::ptrdiff_t reach = 36;
        std::vector<double> rhs(f.size());
        for (std::size_t j = 0; j < f.size(); ++j) rhs[j] = 6.0 * f.centered_difference(j, 2);
        for (std::size_t j = 0; j < f.size(); ++j) {
            double acc = 0.0;
            double w = amp;
            acc += w * rhs[j];
            for (std::ptrdiff_t d = 1; d <= reach; ++d) {
                w *= -r;
                const auto i = static_cast<std::ptrdiff_t>(j);
                acc += w * (rhs[f.grid.wrap(i + d)] + rhs[f.grid.wrap(i - d)]);
            }
            m_[j] = acc;
        }
    }

    [[nodiscard]] const std::vector<double>& second_derivatives() const noexcept { return m_; }

    /// p(x_j + shift) - f_j, free of cancellation when |shift| < h.
    [[nodiscard]] double delta(std::size_t j, double shift) const noexcept
    {
        const double h = f_.grid.spacing;
        const double u = shift / h;
        const double fl = std::floor(u);
        const auto i = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(fl);
        const double fa = f_.at_wrapped(i);
        const double fb = f_.at_wrapped(i + 1);
        const double ma = m_[f_.grid.wrap(i)];
        const double mb = m_[f_.grid.wrap(i + 1)];
        const double c = h * h / 6.0;
        if (fl == 0.0) {
            const double t = u;
            return t * (fb - fa) + c * ((-2 * t + 3 * t * t - t * t * t) * ma + (t * t * t - t) * mb);
        }
        if (fl == -1.0) {
            const double s = -u;
            return s * (fa - fb) + c * ((s * s * s - s) * ma + (-2 * s + 3 * s * s - s * s * s) * mb);
        }
        const double t = u - fl;
        const double p = (1 - t) * fa + t * fb + c * (((1 - t) * (1 - t) * (1 - t) - (1 - t)) * ma + (t * t * t - t) * mb);
        return p - f_[j];
    }
    [[nodiscard]] double value(std::size_t j, double shift) const noexcept { return f_[j] + delta(j, shift); }
    [[nodiscard]] double slope(std::size_t j, double shift) const noexcept
    {
        const double h = f_.grid.spacing;
        const double u = shift / h;
        const double fl = std::floor(u);
        const double t = u - fl;
        const auto i = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(fl);
        const double fa = f_.at_wrapped(i);
        const double fb = f_.at_wrapped(i + 1);
        const double ma = m_[f_.grid.wrap(i)];
        const double mb = m_[f_.grid.wrap(i + 1)];
        return (fb - fa) / h + h / 6.0 * (-(3 * (1 - t) * (1 - t) - 1) * ma + (3 * t * t - 1) * mb);
    }
    [[nodiscard]] double node_slope(std::size_t j) const noexcept { return slope(j, 0.0); }

    /// p(x_j + shift) - f_j - p'(x_j) shift, from the cell polynomial about
    /// x_j when |shift| < h so that no leading terms cancel.
    [[nodiscard]] double taylor_residual(std::size_t j, double shift) const noexcept
    {
        const double h = f_.grid.spacing;
        if (std::abs(shift) >= h) return delta(j, shift) - node_slope(j) * shift;
        const auto i = static_cast<std::ptrdiff_t>(j);
        const double mj = m_[j];
        const double third = shift >= 0.0 ? (m_[f_.grid.wrap(i + 1)] - mj) / h : (mj - m_[f_.grid.wrap(i - 1)]) / h;
        return shift * shift * (0.5 * mj + third * shift / 6.0);
    }
    /// p'(x_j + shift) - p'(x_j), likewise cancellation-free for |shift| < h.
    [[nodiscard]] double slope_delta(std::size_t j, double shift) const noexcept
    {
        const double h = f_.grid.spacing;
        if (std::abs(shift) >= h) return slope(j, shift) - node_slope(j);
        const auto i = static_cast<std::ptrdiff_t>(j);
        const double mj = m_[j];
        const double third = shift >= 0.0 ? (m_[f_.grid.wrap(i + 1)] - mj) / h : (mj - m_[f_.grid.wrap(i - 1)]) / h;
        return shift * (mj + 0.5 * third * shift);
    }

  private:
    const GridProfile& f_;
    std::vector<double> m_;
};

// ---------------------------------------------------------------------------
// Norms

inline double sup_norm(const GridProfile& f) noexcept
{
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double slope_sup_norm(const GridProfile& f)
{
    double m = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) m = std::max(m, std::abs(f.slope(j)));
    return m;
}

inline std::size_t slope_argmax(const GridProfile& f)
{
    std::size_t best = 0;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < f.size(); ++j)
        if (const double s = f.slope(j); s > m) { m = s; best = j; }
    return best;
}

inline double l2_norm(const GridProfile& f) noexcept
{
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(f.grid.spacing * s);
}

/// Discrete H^3 monitor: sum of L2 norms of centered differences of order 0..3.
inline double h3_norm(const GridProfile& f)
{
    double total = 0.0;
    for (int order = 0; order <= 3; ++order) {
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double d = f.centered_difference(j, order);
            s += d * d;
        }
        total += std::sqrt(f.grid.spacing * s);
    }
    return total;
}

inline double min_value(const GridProfile& f) noexcept
{
    return f.values.empty() ? 0.0 : *std::min_element(f.values.begin(), f.values.end());
}

/// False when |f| exceeds 1e-8 within L/10 of the truncation boundary.
inline bool decays_near_boundary(const GridProfile& f, double threshold = 1e-8) noexcept
{
    const double band = 0.1 * f.grid.half_width;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double x = f.grid.node(j);
        if (f.grid.half_width - std::abs(x) <= band && std::abs(f[j]) > threshold) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Initial data

enum class DatumFamily { gaussian_bump, sine_packet, constant, custom_table };

struct InitialDatumSpec {
    DatumFamily family = DatumFamily::gaussian_bump;
    double amplitude = 0.0;
    double width = 1.0;       // gaussian / packet envelope width w
    double wavenumber = 1.0;  // sine_packet k
    double center = 0.0;
    std::vector<std::pair<double, double>> table;  // custom_table (x, f), sorted by x

    void validate() const
    {
        if (!std::isfinite(amplitude) || !std::isfinite(width) || !std::isfinite(wavenumber) ||
            !std::isfinite(center))
            throw ContractError("initial datum parameters must be finite");
        if ((family == DatumFamily::gaussian_bump || family == DatumFamily::sine_packet) && !(width > 0))
            throw ContractError("initial datum width must be positive");
        if (family == DatumFamily::custom_table) {
            if (table.size() < 2) throw ContractError("custom table needs at least two rows");
            for (std::size_t i = 1; i < table.size(); ++i)
                if (!(table[i].first > table[i - 1].first))
                    throw ContractError("custom table x values must be strictly increasing");
        }
    }
};

inline double evaluate_datum(const InitialDatumSpec& spec, double x)
{
    const double y = x - spec.center;
    switch (spec.family) {
    case DatumFamily::gaussian_bump:
        return spec.amplitude * std::exp(-(y * y) / (spec.width * spec.width));
    case DatumFamily::sine_packet:
        return spec.amplitude * std::sin(spec.wavenumber * y) * std::exp(-(y * y) / (spec.width * spec.width));
    case DatumFamily::constant:
        return spec.amplitude;
    case DatumFamily::custom_table: {
        const auto& t = spec.table;
        if (y <= t.front().first) return t.front().second;
        if (y >= t.back().first) return t.back().second;
        auto it = std::upper_bound(t.begin(), t.end(), y,
                                   [](double v, const auto& row) { return v < row.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double s = (y - lo.first) / (hi.first - lo.first);
        return (1 - s) * lo.second + s * hi.second;
    }
    }
    return 0.0;
}

inline GridProfile sample_profile(const InitialDatumSpec& spec, const Grid& g)
{
    spec.validate();
    GridProfile p(g);
    for (std::size_t j = 0; j < g.size(); ++j) p[j] = evaluate_datum(spec, g.node(j));
    return p;
}

template <class F>
GridProfile sample_function(const Grid& g, F&& fn)
{
    GridProfile p(g);
    for (std::size_t j = 0; j < g.size(); ++j) p[j] = fn(g.node(j));
    return p;
}

/// Unnormalized bump exp(-1/(1-x^2)) on (-1, 1).
inline double bump(double x) noexcept
{
    const double a = 1.0 - x * x;
    return a > 0.0 ? std::exp(-1.0 / a) : 0.0;
}

/// Mass of the unnormalized bump, computed once by composite Simpson.
inline double bump_mass()
{
    static const double mass = [] {
        constexpr int n = 20000;
        const double h = 2.0 / n;
        double s = bump(-1.0) + bump(1.0);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * bump(-1.0 + i * h);
        return s * h / 3.0;
    }();
    return mass;
}

/// Unit-mass mollifier J_eps(x) = J(x/eps)/eps.
inline double mollifier(double x, double eps) { return bump(x / eps) / (bump_mass() * eps); }

/// (J_eps * f0)(x) / (1 + eps^2 x^2). The trapezoid weights are renormalized
/// to unit discrete mass so constants are reproduced exactly and the result
/// never exceeds the input in sup norm.
inline GridProfile mollify_initial(const GridProfile& f0, double eps)
{
    if (!(eps > 0.0 && eps < 0.1))
        throw ContractError("mollification eps must lie in (0, 1/10), got " + std::to_string(eps));
    const Grid& g = f0.grid;
    const double h = g.spacing;
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(eps / h));
    std::vector<double> w;
    for (std::ptrdiff_t d = -reach; d <= reach; ++d) w.push_back(mollifier(static_cast<double>(d) * h, eps));
    double mass = 0.0;
    for (double v : w) mass += v;
    if (!(mass > 0.0)) {
        std::fill(w.begin(), w.end(), 0.0);
        w[static_cast<std::size_t>(reach)] = 1.0;
        mass = 1.0;
    }
    for (double& v : w) v /= mass;

    GridProfile out(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        double acc = 0.0;
        for (std::ptrdiff_t d = -reach; d <= reach; ++d)
            acc += w[static_cast<std::size_t>(d + reach)] * f0.at_wrapped(static_cast<std::ptrdiff_t>(j) - d);
        const double x = g.node(j);
        out[j] = acc / (1.0 + eps * eps * x * x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_profile_csv(const std::string& path, const GridProfile& f)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "x,f\n" << std::setprecision(17);
    for (std::size_t j = 0; j < f.size(); ++j) os << f.grid.node(j) << ',' << f[j] << '\n';
}

}  // namespace muskat
