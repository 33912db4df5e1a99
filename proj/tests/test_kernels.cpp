#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <muskat/kernels.hpp>

#include "generators.hpp"

using namespace muskat;

namespace {

GridProfile sine_profile(double L, std::size_t n, double a = 0.05)
{
    return sample_function(make_grid(L, n), [a](double x) { return a * std::sin(x); });
}

// Expanded integrands written straight from the displayed formulas, in long double.
long double xi1_oracle(long double dfx, long double theta, long double eta, long double eps)
{
    const long double T = std::tanh(eta / 2);
    const long double S = std::sinh(eta / 2);
    const long double aT = std::pow(std::abs(T), eps);
    const long double tn = std::tan(theta);
    const long double sec2 = 1 / (std::cos(theta) * std::cos(theta));
    const long double num = dfx * sec2 * aT / T + (eps - 1) * tn * aT / (S * S);
    const long double den = 1 + tn * tn * aT * aT / (T * T);
    return num / den;
}

long double xi2_oracle(long double dfx, long double theta_bar, long double eta, long double eps)
{
    const long double T = std::tanh(eta / 2);
    const long double C = std::cosh(eta / 2);
    const long double aT = std::pow(std::abs(T), eps);
    const long double tn = std::tan(theta_bar);
    const long double sec2 = 1 / (std::cos(theta_bar) * std::cos(theta_bar));
    const long double den = 1 + tn * tn * T * T / (aT * aT);
    return dfx * sec2 * (T / aT) / den + (1 - eps) * tn / (C * C) / (aT * den);
}

}  // namespace

TEST(QuadratureRule, ShellsArePositiveOrderedAndBounded)
{
    const QuadratureRule rule;
    ASSERT_GT(rule.size(), 0u);
    double prev = 0.0;
    std::size_t inner = 0;
    for (const auto& n : rule.nodes) {
        EXPECT_GT(n.eta, prev);
        EXPECT_LE(n.eta, 40.0);
        EXPECT_GT(n.weight, 0.0);
        prev = n.eta;
        if (n.eta < 1.0) ++inner;
    }
    // s = r maps to eta = 1, so r * shells_per_unit shells fall inside (0, 1)
    EXPECT_EQ(inner, 4u * 64u);
    // midpoint rule for d(eta)/ds
    double total = 0.0;
    for (const auto& n : rule.nodes) total += n.weight;
    EXPECT_NEAR(total, 40.0, 1e-6);
}

TEST(QuadratureRule, RejectsBadSpecs)
{
    EXPECT_THROW((QuadratureRule(QuadratureSpec{1.0, 64, 4})), ContractError);
    EXPECT_THROW((QuadratureRule(QuadratureSpec{40.0, 8, 4})), ContractError);
    EXPECT_THROW((QuadratureRule(QuadratureSpec{40.0, 64, 0})), ContractError);
}

TEST(PvSum, SechSquaredHasAnalyticIntegral)
{
    const QuadratureRule rule;
    const double v = pv_sum(rule, [](double eta) {
        const double c = std::cosh(0.5 * eta);
        return 0.5 / (c * c);
    });
    EXPECT_NEAR(v, 2.0 * std::tanh(20.0), 1e-12);
}

TEST(PvIntegrateProperty, OddIntegrandsCancelExactly)
{
    gen::Rng r(99);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g = make_grid(20.0, 128);
        const GridProfile f = sample_profile(gen::smooth_datum(r, 0.5), g);
        QuadratureSpec q{r.uniform(5.0, 40.0), 16 + static_cast<int>(r.index(64)), 1 + static_cast<int>(r.index(6))};
        const double eps = r.uniform(0.0, 0.1);
        const std::size_t j = r.index(g.size());
        const double fj = f[j];
        const auto res = pv_integrate_detailed(f, j, [&](const KernelPoint& p) {
            const double t = std::tanh(0.5 * p.eta);
            return (1.0 + fj * fj) * std::pow(std::abs(t), eps) / t;
        }, QuadratureRule(q));
        EXPECT_LE(std::abs(res.value), 1e-13 * res.abs_sum) << "trial " << trial;
    }
}

TEST(ThetaPair, ZeroAndConstantProfiles)
{
    const Grid g = make_grid(8.0, 64);
    for (double eta : {0.3, -2.7, 15.0}) {
        const KernelPoint z = theta_pair(GridProfile(g, 0.0), 10, eta);
        EXPECT_EQ(z.theta, 0.0);
        EXPECT_EQ(z.theta_bar, 0.0);
        const KernelPoint c = theta_pair(GridProfile(g, 0.4), 10, eta);
        EXPECT_NEAR(c.theta, 0.0, 1e-16);
        EXPECT_NEAR(c.theta_bar, 0.4, 1e-15);
        EXPECT_EQ(c.eta, eta);
    }
}

TEST(ThetaPair, SineExampleOnNodeAlignedShift)
{
    const GridProfile f = sine_profile(8.0, 64);  // h = 0.25, x = 0 at j = 32
    const KernelPoint p = theta_pair(f, 32, 0.5);
    EXPECT_NEAR(p.theta, -0.05 * std::sin(-0.5) / 2, 1e-16);
    EXPECT_NEAR(p.theta, 0.011985638465105075, 1e-16);
    EXPECT_NEAR(p.theta_bar, -p.theta, 1e-16);
}

TEST(Mu, ZeroAndConstantProfiles)
{
    const Grid g = make_grid(8.0, 64);
    EXPECT_EQ(mu1(GridProfile(g, 0.0), 5, 1.5), 0.0);
    EXPECT_EQ(mu2(GridProfile(g, 0.0), 5, 1.5), 0.0);
    const GridProfile c(g, 0.3);
    for (double eta : {0.25, 1.0, -3.0}) {
        EXPECT_NEAR(mu1(c, 5, eta), 0.0, 1e-15);
        EXPECT_NEAR(mu2(c, 5, eta), std::tan(0.3) * std::tanh(0.5 * eta), 1e-15);
    }
}

TEST(Mu, SineExampleMatchesSecondImplementation)
{
    const GridProfile f = sine_profile(8.0, 64);
    const double expected = std::tan(0.05 * std::sin(2.0) / 2) / std::tanh(1.0);
    EXPECT_NEAR(mu1(f, 32, 2.0), expected, 1e-15);
    // second implementation: sin(theta)/cos(theta) * cosh/sinh
    const double th = 0.05 * std::sin(2.0) / 2;
    EXPECT_NEAR(mu1(f, 32, 2.0), std::sin(th) / std::cos(th) * std::cosh(1.0) / std::sinh(1.0), 1e-15);
}

TEST(Mu, LimitAtZeroAndContinuity)
{
    const GridProfile f = sine_profile(10.0, 512);
    const std::size_t j = 200;
    EXPECT_EQ(mu1(f, j, 1e-9), f.slope(j));
    double worst = 0.0;
    for (double eta : {0.1, 0.05, 0.01, 1e-3, 1e-5, -1e-3, -0.1})
        worst = std::max(worst, std::abs(mu1(f, j, eta) - f.slope(j)) / std::abs(eta));
    EXPECT_LT(worst, 1.0);
}

TEST(Mu, WallContactIsSignalled)
{
    const GridProfile f(make_grid(8.0, 64), 1.6);
    EXPECT_THROW((void)mu2(f, 3, 1.0), WallContact);
}

TEST(Xi, ZeroAndConstantProfiles)
{
    for (double eps : {0.0, 0.05}) {
        for (double eta : {0.01, -0.7, 5.0}) {
            EXPECT_EQ(xi1_integrand({0, 0, eta, 0, 0}, eps), 0.0);
            EXPECT_EQ(xi2_integrand({0, 0, eta, 0, 0}, eps), 0.0);
        }
    }
    for (double eta : {0.01, -0.7, 5.0}) EXPECT_EQ(xi1_integrand({0, 0.3, eta, 0, 0}, 0.0), 0.0);
}

TEST(Xi, MatchesIndependentOracle)
{
    const double theta = 0.05 * std::sin(1.0) / 2;  // f = 0.05 sin, x = 0, eta = 1
    const KernelPoint p{theta, -theta, 1.0, 0.05, 0.05 * std::cos(-1.0)};
    for (double eps : {0.05, 0.0, 0.09}) {
        EXPECT_NEAR(xi1_integrand(p, eps), static_cast<double>(xi1_oracle(0.05L, theta, 1.0L, eps)), 1e-12);
        EXPECT_NEAR(xi2_integrand(p, eps), static_cast<double>(xi2_oracle(0.05L, -theta, 1.0L, eps)), 1e-12);
        const KernelPoint q{theta, -theta, -1.0, 0.05, 0.0};
        EXPECT_NEAR(xi1_integrand(q, eps), static_cast<double>(xi1_oracle(0.05L, theta, -1.0L, eps)), 1e-12);
        EXPECT_NEAR(xi2_integrand(q, eps), static_cast<double>(xi2_oracle(0.05L, -theta, -1.0L, eps)), 1e-12);
    }
}

TEST(Xi, ConstantIdentityAgainstAdaptiveOracle)
{
    const double c = 0.5;
    const double eps = 0.01;
    const GridProfile f(make_grid(20.0, 64), c);
    const double pv = pv_integrate(f, 17, [eps](const KernelPoint& p) { return xi2_integrand(p, eps); }, QuadratureSpec{});
    auto integrand = [&](double eta) {
        return static_cast<double>(xi2_oracle(0.0L, c, eta, eps));
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const double oracle = 2.0 * (ts.integrate(integrand, 0.0, 1.0, 1e-13) + es.integrate(integrand, 1.0, INFINITY, 1e-13));
    EXPECT_NEAR(oracle, 4.0 * c, 1e-9);
    EXPECT_NEAR(pv, oracle, 1e-6);
}

TEST(XiProperty, PairedSingularityIsBounded)
{
    gen::Rng r(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g = make_grid(20.0, 1024);
        const GridProfile f = sample_profile(gen::smooth_datum(r, 0.8), g);
        const std::size_t j = 512 + r.index(100) - 50;
        double f2 = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) f2 = std::max(f2, std::abs(f.centered_difference(i, 2)));
        const double s = 1.0 / (std::cos(sup_norm(f)) * std::cos(sup_norm(f)));
        const double bound = 4.0 * (f2 + 1.0) * (1.0 + s) * (1.0 + s);
        for (double eta : {0.1, 0.01, 0.001}) {
            const double pair = xi1_integrand(theta_pair(f, j, eta), 0.0) + xi1_integrand(theta_pair(f, j, -eta), 0.0);
            EXPECT_LE(std::abs(pair), bound) << "trial " << trial << " eta " << eta;
        }
    }
}

TEST(PvIntegrateProperty, ShellRefinementConverges)
{
    const GridProfile f = sample_function(make_grid(20.0, 256), [](double x) { return 0.2 * std::exp(-x * x / 4) * std::cos(x); });
    const std::size_t j = 140;
    std::vector<double> v;
    for (int m : {16, 32, 64, 128})
        v.push_back(pv_integrate(f, j, [](const KernelPoint& p) { return xi1_integrand(p, 0.0); }, QuadratureSpec{40.0, m, 4}));
    // second order until the spline interpolation of the shifted profile dominates
    EXPECT_GE(std::log2(std::abs(v[0] - v[1]) / std::abs(v[1] - v[2])), 1.8);
    EXPECT_LT(std::abs(v[2] - v[3]), 1e-7);
}

TEST(MuBounds, ZeroProfile)
{
    const MuBoundsReport r = mu_bounds_check(GridProfile(make_grid(8.0, 64), 0.0), true);
    EXPECT_EQ(r.far_margin, 0.0);
    EXPECT_EQ(r.near_margin, 0.0);
    EXPECT_FALSE(r.far_bound_applicable);
}

TEST(MuBounds, SinePrecondition)
{
    const MuBoundsReport r = mu_bounds_check(sine_profile(10.0 * std::numbers::pi, 1024), false);
    EXPECT_FALSE(r.far_bound_applicable);
}

TEST(MuBounds, NarrowBumpSatisfiesBounds)
{
    const GridProfile f =
        sample_function(make_grid(10.0, 1024), [](double x) { return 0.02 * std::exp(-x * x / 0.04); });
    const MuBoundsReport r = mu_bounds_check(f, true);
    EXPECT_NEAR(r.slope, 0.0857, 2e-3);
    EXPECT_TRUE(r.far_bound_applicable);
    EXPECT_GE(r.far_margin, -1e-10);
    EXPECT_GE(r.taylor_margin, -1e-10);
    EXPECT_GE(r.square_margin, -1e-10);
    EXPECT_TRUE(std::isfinite(r.near_best_constant));
}
