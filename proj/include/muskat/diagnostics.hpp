#pragma once
/// @file diagnostics.hpp
/// @brief Time-series monitors over trajectories, the weak-formulation
/// residual and the eps-convergence study.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "parallel.hpp"

namespace muskat {

struct DiagnosticsSeries {
    std::vector<double> times;
    std::vector<double> sup_norms;
    std::vector<double> slope_sup_norms;
    std::vector<double> l2_norms;
    std::vector<double> h3_norms;
    std::vector<double> min_values;
    std::vector<bool> finite;  // per snapshot

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

inline DiagnosticsSeries track(const Trajectory& traj)
{
    if (traj.snapshots.empty()) throw ContractError("cannot track an empty trajectory");
    DiagnosticsSeries s;
    for (const Snapshot& snap : traj.snapshots) {
        s.times.push_back(snap.time);
        s.sup_norms.push_back(sup_norm(snap.profile));
        s.slope_sup_norms.push_back(slope_sup_norm(snap.profile));
        s.l2_norms.push_back(l2_norm(snap.profile));
        s.h3_norms.push_back(h3_norm(snap.profile));
        s.min_values.push_back(min_value(snap.profile));
        s.finite.push_back(std::isfinite(s.sup_norms.back()) && std::isfinite(s.slope_sup_norms.back()) &&
                           std::isfinite(s.h3_norms.back()));
    }
    return s;
}

inline void write_series_csv(const std::string& path, const DiagnosticsSeries& s)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "t,sup,slope_sup,l2,h3,min\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.size(); ++i)
        os << s.times[i] << ',' << s.sup_norms[i] << ',' << s.slope_sup_norms[i] << ',' << s.l2_norms[i] << ','
           << s.h3_norms[i] << ',' << s.min_values[i] << '\n';
}

// ---------------------------------------------------------------------------
// Maximum principles

/// AmplitudeOnly monitors sup and sign but no slope bound; used for data
/// outside both regions.
enum class MonitorMode { MaxPrinciple, UniformBound, AmplitudeOnly };

inline const char* to_string(MonitorMode m) noexcept
{
    switch (m) {
    case MonitorMode::MaxPrinciple: return "MaxPrinciple";
    case MonitorMode::UniformBound: return "UniformBound";
    case MonitorMode::AmplitudeOnly: return "AmplitudeOnly";
    }
    return "unknown";
}

struct MonotonicityTolerance {
    double tol = 1e-6;
    double allowance = 0.0;  // a, so the per-comparison slack is tol + a h^2
    double spacing = 0.0;    // h
    double sign_tol = 1e-8;

    [[nodiscard]] double slack() const noexcept { return tol + allowance * spacing * spacing; }
};

struct MonotonicityVerdict {
    MonitorMode mode = MonitorMode::MaxPrinciple;
    bool pass = true;
    bool sup_ok = true;
    bool slope_ok = true;
    bool sign_checked = false;  // f0 >= 0
    bool sign_ok = true;
    bool slope_increased = false;
    double max_sup_increase = 0.0;    // largest step-to-step growth of sup
    double max_slope_increase = 0.0;  // largest step-to-step growth of slope_sup
    double max_slope = 0.0;
    double min_value = 0.0;
    double slack = 0.0;
    std::optional<double> first_violation_time;
    std::vector<bool> step_ok;  // per snapshot
};

inline MonotonicityVerdict monotonicity_report(const DiagnosticsSeries& s, MonitorMode mode,
                                               const MonotonicityTolerance& tol = {})
{
    MonotonicityVerdict v;
    v.mode = mode;
    v.slack = tol.slack();
    if (s.size() == 0) return v;
    v.sign_checked = s.min_values.front() >= 0.0;
    v.min_value = *std::min_element(s.min_values.begin(), s.min_values.end());
    v.max_slope = *std::max_element(s.slope_sup_norms.begin(), s.slope_sup_norms.end());
    v.step_ok.assign(s.size(), true);
    for (std::size_t i = 0; i < s.size(); ++i) {
        bool ok = s.finite[i];
        if (i > 0) {
            const double dsup = s.sup_norms[i] - s.sup_norms[i - 1];
            const double dslope = s.slope_sup_norms[i] - s.slope_sup_norms[i - 1];
            v.max_sup_increase = std::max(v.max_sup_increase, dsup);
            v.max_slope_increase = std::max(v.max_slope_increase, dslope);
            if (dslope > v.slack) v.slope_increased = true;
            if (dsup > v.slack || s.sup_norms[i] > s.sup_norms.front() + v.slack) {
                v.sup_ok = false;
                ok = false;
            }
            bool slope_bad = false;
            if (mode == MonitorMode::MaxPrinciple)
                slope_bad = dslope > v.slack || s.slope_sup_norms[i] > s.slope_sup_norms.front() + v.slack;
            else if (mode == MonitorMode::UniformBound)
                slope_bad = s.slope_sup_norms[i] > 1.0 + v.slack;
            if (slope_bad) {
                v.slope_ok = false;
                ok = false;
            }
        }
        if (v.sign_checked && s.min_values[i] < -tol.sign_tol) {
            v.sign_ok = false;
            ok = false;
        }
        v.step_ok[i] = ok;
        if (!ok && !v.first_violation_time) v.first_violation_time = s.times[i];
    }
    v.pass = v.sup_ok && v.slope_ok && v.sign_ok && !v.first_violation_time;
    return v;
}

// ---------------------------------------------------------------------------
// H^3 growth

struct H3GrowthReport {
    bool finite = true;
    bool super_exponential = false;
    double max_log_derivative = 0.0;  // d/dt log ||f||_{H3}^2
    double fitted_rate = 0.0;         // least-squares slope of log ||f||_{H3}^2
    std::vector<double> log_derivatives;
    [[nodiscard]] bool pass() const noexcept { return finite && !super_exponential; }
};

/// Successive positive log-derivatives may not grow by more than ratio_bound;
/// rates below rate_floor count as flat.
inline H3GrowthReport h3_growth_check(const DiagnosticsSeries& s, double ratio_bound = 10.0, double rate_floor = 1e-3)
{
    H3GrowthReport r;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.finite[i] || !std::isfinite(s.h3_norms[i])) r.finite = false;
    if (!r.finite || s.size() < 2) return r;
    std::vector<double> t;
    std::vector<double> y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s.h3_norms[i] > 0.0)) continue;
        t.push_back(s.times[i]);
        y.push_back(2.0 * std::log(s.h3_norms[i]));
    }
    if (t.size() < 2) return r;
    r.max_log_derivative = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double d = (y[i] - y[i - 1]) / (t[i] - t[i - 1]);
        r.log_derivatives.push_back(d);
        r.max_log_derivative = std::max(r.max_log_derivative, d);
    }
    for (std::size_t i = 1; i < r.log_derivatives.size(); ++i) {
        const double prev = std::max(std::abs(r.log_derivatives[i - 1]), rate_floor);
        if (r.log_derivatives[i] > rate_floor && r.log_derivatives[i] > ratio_bound * prev) r.super_exponential = true;
    }
    double tm = 0.0;
    double ym = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        tm += t[i];
        ym += y[i];
    }
    tm /= static_cast<double>(t.size());
    ym /= static_cast<double>(t.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - tm) * (y[i] - ym);
        den += (t[i] - tm) * (t[i] - tm);
    }
    r.fitted_rate = den > 0.0 ? num / den : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Weak formulation

/// phi(x, t) = B((x - center)/radius) B(t/time_support) with the C^inf bump
/// B(y) = exp(1 - 1/(1 - y^2)), B(0) = 1, restricted to t >= 0.
struct TestFunctionSpec {
    double center = 0.0;
    double radius = 1.0;
    double time_support = 1.0;

    [[nodiscard]] static double profile(double y) noexcept
    {
        const double a = 1.0 - y * y;
        return a > 0.0 ? std::exp(1.0 - 1.0 / a) : 0.0;
    }
    [[nodiscard]] static double profile_derivative(double y) noexcept
    {
        const double a = 1.0 - y * y;
        return a > 0.0 ? profile(y) * (-2.0 * y / (a * a)) : 0.0;
    }
    [[nodiscard]] double space(double x) const noexcept { return profile((x - center) / radius); }
    [[nodiscard]] double space_dx(double x) const noexcept { return profile_derivative((x - center) / radius) / radius; }
    [[nodiscard]] double time(double t) const noexcept { return t < 0.0 ? 0.0 : profile(t / time_support); }

    void validate(const Grid& g, double final_time) const
    {
        if (!(radius > 0.0) || !(time_support > 0.0)) throw ContractError("test function supports must be positive");
        if (std::abs(center) + radius >= g.half_width)
            throw ContractError("test function support [" + std::to_string(center - radius) + ", " +
                                std::to_string(center + radius) + "] leaves the domain");
        if (time_support > final_time * (1.0 + 1e-12))
            throw ContractError("test function time support " + std::to_string(time_support) +
                                " exceeds the trajectory final time " + std::to_string(final_time));
    }
};

/// Physical flux A(x) = (1/k) PV int [atan(tan(theta)/T) + atan(tan(theta_bar) T)] d eta
/// on the normalized profile, T = tanh(eta/2); the confined equation reads
/// f_t = prefactor * A_x.
inline GridProfile confined_flux(const GridProfile& f, const PhysicalSetup& setup = {}, const QuadratureSpec& q = {},
                                 Execution exec = {})
{
    setup.validate();
    const double k = setup.scale();
    const Grid norm{f.grid.half_width * k, f.grid.point_count, f.grid.spacing * k};
    GridProfile g(norm);
    for (std::size_t j = 0; j < f.size(); ++j) g[j] = k * f[j];
    QuadratureSpec qs = q;
    if (k < 1.0) qs.shells_per_unit = static_cast<int>(std::ceil(qs.shells_per_unit / k));
    const QuadratureRule rule(qs);
    GridProfile out(f.grid);
    parallel_for(f.size(), exec, [&](std::size_t j) {
        out[j] = pv_integrate(g, j, [](const KernelPoint& p) {
            const double t = std::tanh(0.5 * p.eta);
            return std::atan(std::tan(p.theta) / t) + std::atan(std::tan(p.theta_bar) * t);
        }, rule) / k;
    });
    return out;
}

struct WeakResidualReport {
    double residual = 0.0;
    double time_term = 0.0;  // int int f phi_t + int f0 phi(., 0)
    double flux_term = 0.0;  // prefactor int int phi_x A
};

/// Residuals of the weak formulation over the snapshots of a trajectory, one
/// per test function, sharing the flux evaluations. The
/// time term is summed by parts, -sum_k int phi_bar_k (f_{k+1} - f_k) dx with
/// phi_bar_k the trapezoid mean of phi over [t_k, t_{k+1}], which equals
/// int int f phi_t + int f0 phi(., 0) up to the time quadrature and vanishes
/// exactly on steady trajectories.
inline std::vector<WeakResidualReport> weak_residuals(const Trajectory& traj, const std::vector<TestFunctionSpec>& phis,
                                                      const PhysicalSetup& setup = {}, const QuadratureSpec& q = {},
                                                      Execution exec = {})
{
    if (traj.snapshots.size() < 2) throw ContractError("weak residual needs at least two snapshots");
    const Grid& grid = traj.snapshots.front().profile.grid;
    for (const auto& phi : phis) phi.validate(grid, traj.snapshots.back().time);
    const std::size_t n = grid.size();
    const std::size_t m = phis.size();
    const double h = grid.spacing;
    std::vector<std::vector<double>> px(m, std::vector<double>(n));
    std::vector<std::vector<double>> pdx(m, std::vector<double>(n));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            px[i][j] = phis[i].space(grid.node(j));
            pdx[i][j] = phis[i].space_dx(grid.node(j));
        }
    std::vector<CompensatedSum> time_term(m);
    std::vector<CompensatedSum> flux_term(m);
    std::vector<double> prev_flux(m, 0.0);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const Snapshot& s = traj.snapshots[k];
        std::optional<GridProfile> a;
        for (std::size_t i = 0; i < m; ++i) {
            const double psi = phis[i].time(s.time);
            double flux_integral = 0.0;
            if (psi != 0.0) {
                if (!a) a = confined_flux(s.profile, setup, q, exec);
                CompensatedSum fs;
                for (std::size_t j = 0; j < n; ++j) fs.add(pdx[i][j] * (*a)[j]);
                flux_integral = psi * fs.value() * h;
            }
            if (k > 0) {
                const Snapshot& p = traj.snapshots[k - 1];
                flux_term[i].add(0.5 * (s.time - p.time) * (prev_flux[i] + flux_integral));
                const double psi_bar = 0.5 * (phis[i].time(p.time) + psi);
                if (psi_bar != 0.0) {
                    CompensatedSum ds;
                    for (std::size_t j = 0; j < n; ++j) ds.add(px[i][j] * (s.profile[j] - p.profile[j]));
                    time_term[i].add(-psi_bar * ds.value() * h);
                }
            }
            prev_flux[i] = flux_integral;
        }
    }
    std::vector<WeakResidualReport> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i].time_term = time_term[i].value();
        out[i].flux_term = setup.prefactor() * flux_term[i].value();
        out[i].residual = std::abs(out[i].time_term - out[i].flux_term);
    }
    return out;
}

inline WeakResidualReport weak_residual_detailed(const Trajectory& traj, const TestFunctionSpec& phi,
                                                 const PhysicalSetup& setup = {}, const QuadratureSpec& q = {},
                                                 Execution exec = {})
{
    return weak_residuals(traj, {phi}, setup, q, exec).front();
}

inline double weak_residual(const Trajectory& traj, const TestFunctionSpec& phi, const PhysicalSetup& setup = {},
                            const QuadratureSpec& q = {}, Execution exec = {})
{
    return weak_residual_detailed(traj, phi, setup, q, exec).residual;
}

/// Three centers, two widths and two time supports fitted to the domain and
/// the trajectory length.
inline std::vector<TestFunctionSpec> test_function_dictionary(const Grid& g, double final_time)
{
    std::vector<TestFunctionSpec> out;
    const double L = g.half_width;
    for (double c : {-0.25 * L, 0.0, 0.25 * L})
        for (double r : {0.25 * L, 0.5 * L})
            for (double ts : {0.5 * final_time, final_time}) out.push_back({c, r, ts});
    return out;
}

// ---------------------------------------------------------------------------
// eps-convergence study

struct EpsRun {
    double eps = 0.0;
    RegularizationParams params;
    Trajectory trajectory;
};

struct EpsStudyReport {
    std::vector<EpsRun> runs;
    std::vector<double> distances;  // d(eps_k, eps_{k+1}) on |x| <= L/2 at the final time
    bool monotone = true;           // non-increasing up to the slack
    bool flagged = false;           // non-monotone but bounded
    bool all_completed = true;
    double slack = 0.2;
};

struct EpsStudyOptions {
    double final_time = 1.0;
    DtPolicy dt{};
    std::size_t snapshot_stride = 1000000;
    bool mollify = false;
    double slack = 0.2;
    RhsForm form = RhsForm::expanded;
    Execution exec{};
    /// Regularization parameters for a given eps and normalized amplitude;
    /// defaults to RegularizationParams::defaults.
    std::function<RegularizationParams(double, double)> params;
};

inline double window_distance(const GridProfile& a, const GridProfile& b)
{
    double d = 0.0;
    const double w = 0.5 * a.grid.half_width;
    for (std::size_t j = 0; j < a.size(); ++j)
        if (std::abs(a.grid.node(j)) <= w + 1e-12) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
}

inline EpsStudyReport eps_convergence_study(const GridProfile& f0, const std::vector<double>& eps_list,
                                            const PhysicalSetup& setup = {}, const QuadratureSpec& q = {},
                                            const EpsStudyOptions& opt = {})
{
    if (eps_list.size() < 2) throw ContractError("eps study needs at least two values");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0 && eps_list[i] < 0.1)) throw ContractError("every eps must lie in (0, 1/10)");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ContractError("eps list must be strictly decreasing");
    }
    EpsStudyReport rep;
    rep.slack = opt.slack;
    for (double eps : eps_list) {
        const GridProfile start = opt.mollify ? mollify_initial(f0, eps) : f0;
        const double amp = setup.scale() * sup_norm(f0);
        const RegularizationParams reg = opt.params ? opt.params(eps, amp) : RegularizationParams::defaults(eps, amp);
        reg.validate(amp);
        RhsOptions ro;
        ro.model = Model::regularized;
        ro.form = opt.form;
        ro.setup = setup;
        ro.reg = reg;
        ro.quadrature = q;
        ro.exec = opt.exec;
        const RhsEngine engine(f0.grid, ro);
        IntegrateOptions io;
        io.final_time = opt.final_time;
        io.dt = opt.dt;
        io.snapshot_stride = opt.snapshot_stride;
        EpsRun run{eps, reg, integrate(start, engine, io)};
        if (run.trajectory.status != RunStatus::completed) rep.all_completed = false;
        rep.runs.push_back(std::move(run));
    }
    for (std::size_t i = 0; i + 1 < rep.runs.size(); ++i)
        rep.distances.push_back(window_distance(rep.runs[i].trajectory.snapshots.back().profile,
                                                rep.runs[i + 1].trajectory.snapshots.back().profile));
    for (std::size_t i = 1; i < rep.distances.size(); ++i)
        if (rep.distances[i] > (1.0 + opt.slack) * rep.distances[i - 1]) rep.monotone = false;
    rep.flagged = !rep.monotone;
    return rep;
}

}  // namespace muskat
