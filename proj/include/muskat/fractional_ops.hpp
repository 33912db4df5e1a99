#pragma once
/// @file fractional_ops.hpp
/// @brief Finite-depth fractional diffusion operators
///   Lambda^{1-eps} phi(x) = PV int (phi(x) - phi(x-eta)) |tanh(eta/2)|^eps / sinh^2(eta/2) d eta
/// and the fused difference Lambda - Lambda^{1-eps}, in normalized units.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "grid.hpp"
#include "kernels.hpp"

namespace muskat {

enum class FracVariant { lambda_pow, lambda_diff };

struct FracOpSpec {
    double eps = 0.05;
    FracVariant variant = FracVariant::lambda_pow;
    QuadratureSpec quadrature{};
    /// The operator order is 1 - multiplicity * eps (1 or 3 in the regularized system).
    int multiplicity = 1;

    void validate() const
    {
        if (!(eps > 0.0 && eps <= 0.1)) throw ContractError("fractional operator eps must lie in (0, 1/10]");
        if (multiplicity < 1 || multiplicity * eps >= 1.0) throw ContractError("fractional order must stay positive");
        quadrature.validate();
    }
};

/// Kernel value at a positive node: |T|^s/sinh^2 or (1-|T|^s)/sinh^2, s = multiplicity * eps.
inline double frac_kernel(const QuadratureNode& n, const FracOpSpec& spec) noexcept
{
    const double s = spec.multiplicity * spec.eps;
    if (spec.variant == FracVariant::lambda_pow) return std::exp(s * n.log_tanh_half) / n.sinh_half_sq;
    return -std::expm1(s * n.log_tanh_half) / n.sinh_half_sq;
}

inline double frac_kernel(double eta, const FracOpSpec& spec) noexcept
{
    return frac_kernel(make_node(std::abs(eta), 1.0), spec);
}

/// Circulant stencil: (A phi)_j = sum_d coeff[d] * phi_{(j+d) mod n}.
struct CirculantOperator {
    Grid grid;
    std::vector<double> coeff;

    [[nodiscard]] GridProfile apply(const GridProfile& phi) const
    {
        const std::size_t n = grid.size();
        GridProfile out(grid);
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t d = 0; d < n; ++d) acc += coeff[d] * phi.values[(j + d) % n];
            out[j] = acc;
        }
        return out;
    }
    void axpy(double scale, const CirculantOperator& other)
    {
        for (std::size_t d = 0; d < coeff.size(); ++d) coeff[d] += scale * other.coeff[d];
    }
};

/// Assemble the operator phi -> sum_k w_k K_k (2 phi(x) - phi(x-eta_k) - phi(x+eta_k))
/// on the periodic cubic interpolant. Only the +eta stencil is formed; the
/// -eta stencil is its mirror image, so the matrix is exactly symmetric.
inline CirculantOperator assemble_operator(const Grid& g, const QuadratureRule& rule,
                                           const std::function<double(const QuadratureNode&)>& kernel)
{
    const std::size_t n = g.size();
    std::vector<double> c(n, 0.0);
    auto add_pair = [&](std::ptrdiff_t d, double v) {
        c[g.wrap(d)] += v;
        c[g.wrap(-d)] += v;
    };
    for (const auto& node : rule.nodes) {
        const double wk = node.weight * kernel(node);
        const ShiftStencil st = shift_stencil(node.eta, g.spacing);
        if (st.base == 0) {
            const auto dev = catmull_rom_deviation(st.frac);
            for (std::ptrdiff_t r = 0; r < 4; ++r) add_pair(r - 1, -wk * dev[static_cast<std::size_t>(r)]);
        } else {
            c[0] += 2.0 * wk;
            for (std::ptrdiff_t r = 0; r < 4; ++r)
                add_pair(st.base - 1 + r, -wk * st.weights.value[static_cast<std::size_t>(r)]);
        }
    }
    return {g, std::move(c)};
}

inline CirculantOperator build_operator(const Grid& g, const FracOpSpec& spec)
{
    spec.validate();
    const QuadratureRule rule(spec.quadrature);
    return assemble_operator(g, rule, [&](const QuadratureNode& n) { return frac_kernel(n, spec); });
}

inline GridProfile lambda_apply(const GridProfile& phi, const FracOpSpec& spec)
{
    return build_operator(phi.grid, spec).apply(phi);
}

/// The operator applied to an exactly known function at a point.
template <class Phi>
double lambda_at(Phi&& phi, double x, const FracOpSpec& spec)
{
    spec.validate();
    const QuadratureRule rule(spec.quadrature);
    const double px = phi(x);
    return pv_sum_detailed(rule, [&](const QuadratureNode& n, int sign) {
               return (px - phi(x - sign * n.eta)) * frac_kernel(n, spec);
           })
        .value;
}

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }
    [[nodiscard]] double max_abs() const noexcept
    {
        double m = 0.0;
        for (double v : data) m = std::max(m, std::abs(v));
        return m;
    }
};

inline constexpr std::size_t max_dense_points = 1024;

inline DenseMatrix operator_matrix(const Grid& g, const FracOpSpec& spec)
{
    if (g.size() > max_dense_points)
        throw ContractError("operator_matrix supports at most 1024 points, got " + std::to_string(g.size()));
    const CirculantOperator op = build_operator(g, spec);
    const std::size_t n = g.size();
    DenseMatrix m{n, n, std::vector<double>(n * n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < n; ++d) m.data[i * n + (i + d) % n] = op.coeff[d];
    return m;
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& m)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << std::setprecision(17);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

inline double l1_norm(const GridProfile& f) noexcept
{
    double s = 0.0;
    for (double v : f.values) s += std::abs(v);
    return s * f.grid.spacing;
}

// ---------------------------------------------------------------------------
// Derivative of Lambda^{1-eps} in two forms

struct DerivativeFormReport {
    double discrepancy = 0.0;  // sup_j |form_a - form_b|
    double worst_x = 0.0;
    double form_b_sup = 0.0;
};

namespace detail {

/// 1 - eta/sinh(eta) and 1 - eta/tanh(eta), by series near zero.
inline double one_minus_eta_over_sinh(double eta) noexcept
{
    const double e2 = eta * eta;
    if (std::abs(eta) < 0.05) return e2 / 6.0 * (1.0 - e2 * (7.0 / 60.0 - e2 * 31.0 / 2520.0));
    return 1.0 - eta / std::sinh(eta);
}

inline double one_minus_eta_over_tanh(double eta) noexcept
{
    const double e2 = eta * eta;
    if (std::abs(eta) < 0.05) return -e2 / 3.0 * (1.0 - e2 * (1.0 / 15.0 - e2 * 2.0 / 315.0));
    return 1.0 - eta / std::tanh(eta);
}

/// Evaluates both forms at one point given phi'(x) and a sampler returning
/// (phi(x - eta) - phi(x) + eta phi'(x), phi'(x - eta) - phi'(x)).
template <class Shifted>
std::pair<double, double> derivative_forms(double dpx, Shifted&& shifted, const QuadratureRule& rule, double eps)
{
    const FracOpSpec ks{eps};
    CompensatedSum form_b;
    CompensatedSum sinh_part;
    CompensatedSum tanh_part;
    for (const auto& n : rule.nodes) {
        const double k = frac_kernel(n, ks);
        double b = 0.0;
        double s = 0.0;
        double t = 0.0;
        for (int sign : {1, -1}) {
            const double eta = sign * n.eta;
            const auto [rem, dslope] = shifted(eta);
            b -= dslope;
            s += dpx * one_minus_eta_over_sinh(eta) + rem / std::sinh(eta);
            t += dpx * one_minus_eta_over_tanh(eta) + rem / std::tanh(eta);
        }
        form_b.add(n.weight * k * b);
        sinh_part.add(n.weight * k * s);
        tanh_part.add(n.weight * k * t);
    }
    const double form_a = (1.0 - eps) * sinh_part.value() + tanh_part.value() + 4.0 * dpx;
    return {form_a, form_b.value()};
}

}  // namespace detail

/// Compares the three-term expansion of Lambda^{1-eps} d/dx phi (with the
/// 4 phi' term) against the direct form PV int (phi'(x) - phi'(x-eta)) K d eta.
/// Both forms act on the periodic C^2 spline through phi: the jump of the
/// second derivative of a C^1 interpolant makes the two forms differ by a
/// logarithmically divergent amount.
inline DerivativeFormReport derivative_form_check(const GridProfile& phi, double eps, const QuadratureSpec& q = {})
{
    FracOpSpec{eps, FracVariant::lambda_pow, q}.validate();
    const QuadratureRule rule(q);
    const PeriodicSpline sp(phi);
    DerivativeFormReport r;
    for (std::size_t j = 0; j < phi.size(); ++j) {
        auto shifted = [&](double eta) { return std::pair{sp.taylor_residual(j, -eta), sp.slope_delta(j, -eta)}; };
        const auto [a, b] = detail::derivative_forms(sp.node_slope(j), shifted, rule, eps);
        r.form_b_sup = std::max(r.form_b_sup, std::abs(b));
        if (const double d = std::abs(a - b); d > r.discrepancy) {
            r.discrepancy = d;
            r.worst_x = phi.grid.node(j);
        }
    }
    return r;
}

/// Same comparison for an exactly known function. residual(x, eta) must
/// return phi(x - eta) - phi(x) + eta phi'(x) and slope_change(x, eta) must
/// return phi'(x - eta) - phi'(x), both accurately for small eta.
template <class Residual, class SlopeChange>
std::pair<double, double> derivative_forms_at(Residual&& residual, SlopeChange&& slope_change, double dphi_x,
                                              double x, double eps, const QuadratureSpec& q = {})
{
    const QuadratureRule rule(q);
    return detail::derivative_forms(
        dphi_x, [&](double eta) { return std::pair{residual(x, eta), slope_change(x, eta)}; }, rule, eps);
}

// ---------------------------------------------------------------------------
// Log-tanh facts

struct LogTanhReport {
    bool inequality_holds = true;
    double worst_slack = 0.0;  // min over the scan of eps |log tanh y| - ||tanh y|^eps - 1|
    std::size_t samples = 0;
    double integral = 0.0;     // int_0^inf |log tanh y| dy
    double integral_error_estimate = 0.0;
};

inline LogTanhReport log_tanh_facts_check(std::size_t scan_points = 4001)
{
    LogTanhReport r;
    r.worst_slack = std::numeric_limits<double>::infinity();
    const double lo = std::log(1e-4);
    const double hi = std::log(20.0);
    for (double eps : {0.1, 0.05, 0.01}) {
        for (std::size_t i = 0; i < scan_points; ++i) {
            const double y = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1));
            const double lt = std::log(std::tanh(y));
            const double lhs = std::abs(std::expm1(eps * lt));
            const double rhs = eps * std::abs(lt);
            r.worst_slack = std::min(r.worst_slack, rhs - lhs);
            r.inequality_holds = r.inequality_holds && lhs <= rhs;
            ++r.samples;
        }
    }
    auto integrand = [](double y) { return -std::log(std::tanh(y)); };
    boost::math::quadrature::tanh_sinh<double> inner;
    boost::math::quadrature::exp_sinh<double> outer;
    double e1 = 0.0;
    double e2 = 0.0;
    r.integral = inner.integrate(integrand, 0.0, 1.0, 1e-14, &e1) + outer.integrate(integrand, 1.0, std::numeric_limits<double>::infinity(), 1e-14, &e2);
    r.integral_error_estimate = e1 + e2;
    return r;
}

// ---------------------------------------------------------------------------
// Property harness

struct OperatorHarnessSpec {
    std::size_t points = 256;
    double half_width = 20.0;
    double eps = 0.05;
    std::size_t vectors = 100;
    std::uint64_t seed = 20240601;
    QuadratureSpec quadrature{};
};

struct OperatorHarnessReport {
    double asymmetry = 0.0;         // max |A - A^T| / max |A|
    double min_quadratic = 0.0;     // min v^T A v / |v|^2 over the random vectors
    double max_row_sum = 0.0;
    std::vector<double> rate_eps;
    std::vector<double> rate_l1;    // ||(Lambda - Lambda^{1-eps}) gaussian||_L1
    double rate_slope = 0.0;        // log-log least squares
    double form_discrepancy = 0.0;
    double form_discrepancy_refined = 0.0;
    LogTanhReport facts;

    [[nodiscard]] bool symmetric() const noexcept { return asymmetry <= 1e-12; }
    [[nodiscard]] bool positive() const noexcept { return min_quadratic >= -1e-10; }
    [[nodiscard]] bool annihilates_constants() const noexcept { return max_row_sum <= 1e-12; }
    [[nodiscard]] bool rate_ok() const noexcept { return rate_slope >= 0.9; }
    [[nodiscard]] bool forms_ok() const noexcept
    {
        return form_discrepancy <= 1e-6 && form_discrepancy_refined * 3.0 <= form_discrepancy;
    }
    [[nodiscard]] bool facts_ok() const noexcept
    {
        return facts.inequality_holds && std::abs(facts.integral - 1.2337005501361698) <= 1e-6;
    }
    [[nodiscard]] bool pass() const noexcept
    {
        return symmetric() && positive() && annihilates_constants() && rate_ok() && forms_ok() && facts_ok();
    }
};

inline double matrix_asymmetry(const DenseMatrix& m)
{
    double d = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j) d = std::max(d, std::abs(m(i, j) - m(j, i)));
    const double a = m.max_abs();
    return a > 0.0 ? d / a : 0.0;
}

/// min over seeded Gaussian vectors of v^T A v / |v|^2.
inline double min_quadratic_form(const DenseMatrix& m, std::size_t vectors, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double out = std::numeric_limits<double>::infinity();
    std::vector<double> v(m.cols);
    for (std::size_t k = 0; k < vectors; ++k) {
        double vv = 0.0;
        for (double& x : v) {
            x = normal(rng);
            vv += x * x;
        }
        double q = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j) row += m(i, j) * v[j];
            q += v[i] * row;
        }
        out = std::min(out, q / vv);
    }
    return out;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]);
        const double b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline OperatorHarnessReport run_operator_harness(const OperatorHarnessSpec& spec = {})
{
    OperatorHarnessReport r;
    const Grid g = make_grid(spec.half_width, spec.points);
    FracOpSpec fs{spec.eps, FracVariant::lambda_pow, spec.quadrature};
    const DenseMatrix m = operator_matrix(g, fs);
    r.asymmetry = matrix_asymmetry(m);
    r.min_quadratic = min_quadratic_form(m, spec.vectors, spec.seed);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j);
        r.max_row_sum = std::max(r.max_row_sum, std::abs(s));
    }
    const GridProfile gauss = sample_function(g, [](double x) { return std::exp(-x * x); });
    for (double e : {0.1, 0.05, 0.025, 0.0125}) {
        r.rate_eps.push_back(e);
        r.rate_l1.push_back(l1_norm(lambda_apply(gauss, FracOpSpec{e, FracVariant::lambda_diff, spec.quadrature})));
    }
    r.rate_slope = loglog_slope(r.rate_eps, r.rate_l1);
    r.form_discrepancy = derivative_form_check(gauss, spec.eps, spec.quadrature).discrepancy;
    r.form_discrepancy_refined = derivative_form_check(gauss, spec.eps, spec.quadrature.refined()).discrepancy;
    r.facts = log_tanh_facts_check();
    return r;
}

}  // namespace muskat
