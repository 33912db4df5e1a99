#pragma once
/// @file kernels.hpp
/// @brief Pointwise integrands of the confined contour equation and the
/// paired principal-value quadrature engine.
///
/// All kernels are written in normalized units (depth l = pi/2), where the
/// strip half-height is pi/2 and the hyperbolic kernels depend on eta/2.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace muskat {

/// The interface touched (or numerically reached) a wall of the strip.
class WallContact : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A quadrature or time-stepping stage produced a non-finite value.
class NonFiniteValue : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double half_pi = std::numbers::pi / 2;
inline constexpr double wall_guard = 1e-6;

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureSpec {
    double eta_cutoff = 40.0;
    int shells_per_unit = 64;
    int inner_refinement = 4;

    void validate() const
    {
        if (!(eta_cutoff > 1.0)) throw ContractError("quadrature eta_cutoff must exceed 1");
        if (shells_per_unit < 16) throw ContractError("quadrature shells_per_unit must be at least 16");
        if (inner_refinement < 1) throw ContractError("quadrature inner_refinement must be at least 1");
    }
    [[nodiscard]] QuadratureSpec refined(int factor = 2) const
    {
        QuadratureSpec q = *this;
        q.shells_per_unit *= factor;
        return q;
    }
};

/// One positive shell node; the rule always evaluates +eta and -eta together.
struct QuadratureNode {
    double eta;
    double weight;
    double tanh_half;      // tanh(eta/2) > 0
    double log_tanh_half;  // log(tanh(eta/2))
    double sinh_half_sq;   // sinh^2(eta/2)
    double sech_half_sq;   // sech^2(eta/2)
};

inline QuadratureNode make_node(double eta, double weight)
{
    const double half = 0.5 * eta;
    const double t = std::tanh(half);
    const double sh = std::sinh(half);
    const double ch = std::cosh(half);
    return {eta, weight, t, std::log(t), sh * sh, 1.0 / (ch * ch)};
}

/// Symmetric shell rule on 0 < |eta| <= H, ordered innermost first.
///
/// Shells are midpoints of a uniform partition in s, mapped by
/// eta = s^3 / (a^2 + s^2) with a^2 = r^3 - r^2 (r = inner_refinement), so
/// that s = r lands on eta = 1: about r * shells_per_unit shells fall in
/// |eta| < 1 and the spacing tends to 1/shells_per_unit far out. The map is
/// odd in s, so even paired integrands see a midpoint rule whose endpoint
/// corrections vanish, and the |eta|^eps cusp becomes s^(3 eps) * s^2.
struct QuadratureRule {
    QuadratureSpec spec;
    std::vector<QuadratureNode> nodes;

    explicit QuadratureRule(const QuadratureSpec& s = {}) : spec(s)
    {
        spec.validate();
        const double r = spec.inner_refinement;
        const double a2 = r * r * r - r * r;
        const double big_h = spec.eta_cutoff;
        double top = big_h + 1.0;
        for (int it = 0; it < 60; ++it) {
            const double g = top * top * top - big_h * top * top - big_h * a2;
            const double dg = 3 * top * top - 2 * big_h * top;
            const double step = g / dg;
            top -= step;
            if (std::abs(step) < 1e-15 * top) break;
        }
        const auto count = static_cast<std::size_t>(std::ceil(spec.shells_per_unit * top - 1e-9));
        const double ds = top / static_cast<double>(count);
        nodes.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double sv = (static_cast<double>(i) + 0.5) * ds;
            const double q = a2 + sv * sv;
            nodes.push_back(make_node(sv * sv * sv / q, ds * sv * sv * (3 * a2 + sv * sv) / (q * q)));
        }
    }
    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
  public:
    void add(double v) noexcept
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct PvResult {
    double value = 0.0;
    double abs_sum = 0.0;  // sum of |w g(+eta)| + |w g(-eta)|
};

/// Paired midpoint sum of g over the rule: sum_k w_k (g(+eta_k) + g(-eta_k)).
/// g receives (node, sign) with sign = +1 or -1.
template <class G>
PvResult pv_sum_detailed(const QuadratureRule& rule, G&& g)
{
    CompensatedSum acc;
    double abs_sum = 0.0;
    for (const auto& node : rule.nodes) {
        const double plus = g(node, +1);
        const double minus = g(node, -1);
        acc.add(node.weight * (plus + minus));
        abs_sum += node.weight * (std::abs(plus) + std::abs(minus));
    }
    return {acc.value(), abs_sum};
}

/// Paired sum of a plain function of eta.
template <class G>
double pv_sum(const QuadratureRule& rule, G&& g)
{
    return pv_sum_detailed(rule, [&](const QuadratureNode& n, int sign) { return g(sign * n.eta); }).value;
}

// ---------------------------------------------------------------------------
// Kernel points

/// theta = (f(x) - f(x - eta))/2 and theta_bar = (f(x) + f(x - eta))/2.
struct KernelPoint {
    double theta = 0.0;
    double theta_bar = 0.0;
    double eta = 0.0;
    double dfx = 0.0;          // centered difference at x
    double df_shifted = 0.0;   // slope of the interpolant at x - eta
};

/// Hyperbolic quantities at a signed offset, shared by every integrand.
struct SignedKernel {
    double tanh_half;      // signed
    double log_abs_tanh;
    double sinh_half_sq;
    double sech_half_sq;

    static SignedKernel from(const QuadratureNode& n, int sign) noexcept
    {
        return {sign * n.tanh_half, n.log_tanh_half, n.sinh_half_sq, n.sech_half_sq};
    }
    static SignedKernel from_eta(double eta) noexcept
    {
        const double half = 0.5 * eta;
        const double t = std::tanh(half);
        const double sh = std::sinh(half);
        const double ch = std::cosh(half);
        return {t, std::log(std::abs(t)), sh * sh, 1.0 / (ch * ch)};
    }
};

inline KernelPoint theta_pair(const GridProfile& f, std::size_t j, double eta)
{
    const ShiftStencil st = shift_stencil(-eta, f.grid.spacing);
    const double d = f.sample_delta(j, st);
    return {-0.5 * d, f[j] + 0.5 * d, eta, f.slope(j), f.sample_slope(j, st)};
}

inline void check_strip(double angle, const char* what, double eta)
{
    if (!(std::abs(angle) < half_pi)) {
        std::ostringstream os;
        os << "wall contact: |" << what << "| = " << std::abs(angle) << " >= pi/2 at eta = " << eta;
        throw WallContact(os.str());
    }
}

/// mu1 = tan(theta)/tanh(eta/2); its removable singularity at eta = 0 is dfx.
inline double mu1(const KernelPoint& p)
{
    check_strip(p.theta, "theta", p.eta);
    if (std::abs(p.eta) < 1e-8) return p.dfx;
    return std::tan(p.theta) / std::tanh(0.5 * p.eta);
}

/// mu2 = tan(theta_bar) tanh(eta/2).
inline double mu2(const KernelPoint& p)
{
    check_strip(p.theta_bar, "theta_bar", p.eta);
    return std::tan(p.theta_bar) * std::tanh(0.5 * p.eta);
}

inline double mu1(const GridProfile& f, std::size_t j, double eta) { return mu1(theta_pair(f, j, eta)); }
inline double mu2(const GridProfile& f, std::size_t j, double eta) { return mu2(theta_pair(f, j, eta)); }

namespace detail {

// Expanded form: x-derivative at fixed integration point x - eta.
inline double xi1_expanded(const KernelPoint& p, const SignedKernel& k, double eps) noexcept
{
    const double a = std::exp(eps * k.log_abs_tanh);  // |T|^eps
    const double t = k.tanh_half;
    const double tn = std::tan(p.theta);
    const double sec2 = 1.0 + tn * tn;
    const double num = p.dfx * sec2 * a / t + (eps - 1.0) * tn * a / k.sinh_half_sq;
    return num * (t * t) / (t * t + tn * tn * a * a);
}

inline double xi2_expanded(const KernelPoint& p, const SignedKernel& k, double eps) noexcept
{
    const double b = std::exp(-eps * k.log_abs_tanh);  // |T|^-eps
    const double t = k.tanh_half;
    const double tn = std::tan(p.theta_bar);
    const double sec2 = 1.0 + tn * tn;
    const double v = tn * t * b;
    const double num = p.dfx * sec2 * t * b + k.sech_half_sq * (1.0 - eps) * tn * b;
    return num / (1.0 + v * v);
}

// Direct form: x-derivative at fixed offset eta, uses the slope at x - eta.
inline double xi1_direct(const KernelPoint& p, const SignedKernel& k, double eps) noexcept
{
    const double a = std::exp(eps * k.log_abs_tanh);
    const double t = k.tanh_half;
    const double tn = std::tan(p.theta);
    const double sec2 = 1.0 + tn * tn;
    return (p.dfx - p.df_shifted) * sec2 * a * t / (t * t + tn * tn * a * a);
}

inline double xi2_direct(const KernelPoint& p, const SignedKernel& k, double eps) noexcept
{
    const double b = std::exp(-eps * k.log_abs_tanh);
    const double t = k.tanh_half;
    const double tn = std::tan(p.theta_bar);
    const double sec2 = 1.0 + tn * tn;
    const double v = tn * t * b;
    return (p.dfx + p.df_shifted) * sec2 * t * b / (1.0 + v * v);
}

}  // namespace detail

/// Regularized Xi_1 integrand in expanded form (eps = 0 gives the singular
/// kernel of the confined equation):
///   [f' sec^2(theta) |T|^eps / T + (eps-1) tan(theta) |T|^eps / sinh^2(eta/2)]
///   / [1 + tan^2(theta) |T|^(2 eps) / T^2],    T = tanh(eta/2).
inline double xi1_integrand(const KernelPoint& p, double eps)
{
    return detail::xi1_expanded(p, SignedKernel::from_eta(p.eta), eps);
}

/// Regularized Xi_2 integrand in expanded form: the f' sec^2(theta_bar) term
/// and the sech^2 (1-eps) tan(theta_bar) term sharing one denominator.
inline double xi2_integrand(const KernelPoint& p, double eps)
{
    return detail::xi2_expanded(p, SignedKernel::from_eta(p.eta), eps);
}

/// Paired PV quadrature of integrand(KernelPoint) at node j of f.
template <class Integrand>
PvResult pv_integrate_detailed(const GridProfile& f, std::size_t j, Integrand&& integrand,
                               const QuadratureRule& rule)
{
    const double h = f.grid.spacing;
    const double fx = f[j];
    const double dfx = f.slope(j);
    return pv_sum_detailed(rule, [&](const QuadratureNode& n, int sign) {
        const double eta = sign * n.eta;
        const ShiftStencil st = shift_stencil(-eta, h);
        const double d = f.sample_delta(j, st);
        const KernelPoint p{-0.5 * d, fx + 0.5 * d, eta, dfx, f.sample_slope(j, st)};
        const double v = integrand(p);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "non-finite integrand at x = " << f.grid.node(j) << ", eta = " << eta;
            throw NonFiniteValue(os.str());
        }
        return v;
    });
}

template <class Integrand>
double pv_integrate(const GridProfile& f, std::size_t j, Integrand&& integrand, const QuadratureRule& rule)
{
    return pv_integrate_detailed(f, j, std::forward<Integrand>(integrand), rule).value;
}

template <class Integrand>
double pv_integrate(const GridProfile& f, std::size_t j, Integrand&& integrand, const QuadratureSpec& q)
{
    return pv_integrate(f, j, std::forward<Integrand>(integrand), QuadratureRule(q));
}

// ---------------------------------------------------------------------------
// Bounds on mu1

struct MuBoundsReport {
    double amplitude = 0.0;  // ||f||_inf
    double slope = 0.0;      // ||f'||_inf
    /// tan(||f||) < ||f'|| tanh(1/2): the chain ending in |mu1| < ||f'|| applies.
    bool far_bound_applicable = false;
    /// min over |eta| >= 1 of tan(||f||)/tanh(1/2) - |mu1|.
    double far_margin = std::numeric_limits<double>::infinity();
    /// min over |eta| <= 1 of c (||f||^2 + 1) ||f'|| - |mu1| with c = 1.
    double near_margin = std::numeric_limits<double>::infinity();
    /// Smallest c making the near bound hold on the sampled pairs.
    double near_best_constant = 0.0;
    /// At the extremum of f' of largest modulus, over 1e-3 <= |eta| <= 1:
    /// RHS - LHS of the second-order bounds on mu1 - f'(x_t) and on
    /// mu1^2 - f'(x_t)^2 (the latter only where mu1 >= f'(x_t)); signs are
    /// mirrored at a minimum of f'.
    bool evaluated_at_argmax = false;
    double argmax_x = 0.0;
    double taylor_margin = std::numeric_limits<double>::infinity();
    double square_margin = std::numeric_limits<double>::infinity();

    [[nodiscard]] double worst_margin() const noexcept
    {
        double m = std::min(far_margin, near_margin);
        if (evaluated_at_argmax) m = std::min({m, taylor_margin, square_margin});
        return m;
    }
};

inline MuBoundsReport mu_bounds_check(const GridProfile& f, bool at_argmax, const QuadratureSpec& q = {})
{
    const QuadratureRule rule(q);
    MuBoundsReport r;
    r.amplitude = sup_norm(f);
    r.slope = slope_sup_norm(f);
    if (!(r.amplitude < half_pi)) throw WallContact("mu_bounds_check requires |f| < pi/2");
    const double th = std::tanh(0.5);
    const double far_rhs = std::tan(r.amplitude) / th;
    const double near_scale = (r.amplitude * r.amplitude + 1.0) * r.slope;
    r.far_bound_applicable = std::tan(r.amplitude) < r.slope * th;

    for (std::size_t j = 0; j < f.size(); ++j) {
        for (const auto& n : rule.nodes) {
            for (int sign : {+1, -1}) {
                const double m = std::abs(mu1(f, j, sign * n.eta));
                if (n.eta >= 1.0) {
                    r.far_margin = std::min(r.far_margin, far_rhs - m);
                } else {
                    r.near_margin = std::min(r.near_margin, near_scale - m);
                    if (near_scale > 0) r.near_best_constant = std::max(r.near_best_constant, m / near_scale);
                    else if (m > 0) r.near_best_constant = std::numeric_limits<double>::infinity();
                }
            }
        }
    }

    if (at_argmax) {
        // The facts hold at the exact maximum of f', so it is located below
        // grid resolution on the C^2 spline, where f'' is piecewise linear.
        r.evaluated_at_argmax = true;
        const PeriodicSpline sp(f);
        const auto& m2 = sp.second_derivatives();
        const auto jt = static_cast<std::ptrdiff_t>(slope_argmax(f));
        const double h = f.grid.spacing;
        const double sgn = f.slope(static_cast<std::size_t>(jt)) >= 0.0 ? 1.0 : -1.0;
        std::size_t base = static_cast<std::size_t>(jt);
        double shift = 0.0;
        double best = sgn * sp.node_slope(base);
        for (std::ptrdiff_t c = jt - 2; c <= jt + 1; ++c) {
            const std::size_t i = f.grid.wrap(c);
            const double ma = sgn * m2[i];
            const double mb = sgn * m2[f.grid.wrap(c + 1)];
            if (!(ma > 0.0 && mb <= 0.0)) continue;
            const double t = ma / (ma - mb);
            if (const double v = sgn * sp.slope(i, t * h); v > best) {
                best = v;
                base = i;
                shift = t * h;
            }
        }
        r.argmax_x = f.grid.node(base) + shift;
        const double ds = sp.slope(base, shift);
        const double d = std::abs(ds);
        const double poly = (d + 5 * d * d * d) / (48 * th);
        const double second = d + std::tan(0.5 * d) / th;
        for (const auto& n : rule.nodes) {
            if (n.eta < 1e-3) continue;  // below this mu1 - f' is pure rounding
            if (n.eta > 1.0) break;
            for (int sign : {+1, -1}) {
                const double eta = sign * n.eta;
                const double theta = 0.5 * (sp.delta(base, shift) - sp.delta(base, shift - eta));
                check_strip(theta, "theta", eta);
                const double m = std::tan(theta) / std::tanh(0.5 * eta);
                const double rhs = n.eta * n.eta * poly;
                r.taylor_margin = std::min(r.taylor_margin, rhs - sgn * (m - ds));
                if (sgn * (m - ds) >= 0) r.square_margin = std::min(r.square_margin, rhs * second - (m * m - ds * ds));
            }
        }
    }
    return r;
}

}  // namespace muskat
