#pragma once
/// @file dynamics.hpp
/// @brief Right-hand sides of the confined contour equation, its
/// regularization (original and expanded forms) and the unconfined
/// comparison equation, plus RK4 time stepping.
///
/// Every kernel works in normalized units where the strip half-height is
/// pi/2. A profile f on a grid of half width L at depth l is mapped to
/// g = k f on a grid of half width k L with k = pi/(2l); the physical
/// right-hand side is (P/2) R(g)(k x) with P = (rho2 - rho1)/(2 pi).

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fractional_ops.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "parallel.hpp"

namespace muskat {

struct PhysicalSetup {
    double depth = half_pi;
    double density_jump = 4.0 * std::numbers::pi;

    void validate() const
    {
        if (!(depth > 0.0) || !std::isfinite(depth)) throw ContractError("depth l must be positive");
        if (!(density_jump > 0.0) || !std::isfinite(density_jump))
            throw ContractError("density jump must be positive (stable regime only)");
    }
    [[nodiscard]] double prefactor() const noexcept { return density_jump / (2.0 * std::numbers::pi); }
    /// k = pi/(2l); lengths and heights are multiplied by k.
    [[nodiscard]] double scale() const noexcept { return half_pi / depth; }
    /// Normalized time runs k times faster than physical time.
    [[nodiscard]] double time_scale() const noexcept { return scale(); }
};

inline double sec2(double a) { return 1.0 / (std::cos(a) * std::cos(a)); }

struct RegularizationParams {
    double eps = 0.05;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha3 = 0.0;
    double alpha4 = 0.0;

    /// Defaults for a datum of normalized amplitude amp.
    static RegularizationParams defaults(double eps, double amp)
    {
        const double s = sec2(amp);
        return {eps, 1000.0 * (1.0 + s * s) * (1.0 + std::tan(amp)), 3.0 * (1.0 + s), 2.0, 2.0 * s};
    }

    void validate(double amp) const
    {
        if (!(eps > 0.0 && eps < 0.1)) throw ContractError("regularization eps must lie in (0, 1/10)");
        if (!(amp < half_pi)) throw ContractError("datum touches the strip boundary");
        for (double a : {alpha1, alpha2, alpha3, alpha4})
            if (!(a >= 0.0) || !std::isfinite(a)) throw ContractError("alpha parameters must be finite and >= 0");
        const double s = sec2(amp);
        if (!(alpha2 > 2.0 * s))
            throw ContractError("alpha2 = " + std::to_string(alpha2) + " must exceed 2 sec^2(|f0|) = " +
                                std::to_string(2.0 * s));
        if (!(alpha3 > 1.0)) throw ContractError("alpha3 must exceed 1");
        if (!(alpha4 > s))
            throw ContractError("alpha4 = " + std::to_string(alpha4) + " must exceed sec^2(|f0|) = " +
                                std::to_string(s));
    }
};

enum class RhsForm { original, expanded };
enum class Model { confined, unconfined, regularized };

struct RhsOptions {
    Model model = Model::confined;
    RhsForm form = RhsForm::expanded;
    PhysicalSetup setup{};
    std::optional<RegularizationParams> reg;
    QuadratureSpec quadrature{};
    Execution exec{};
    /// Raise shells_per_unit by 1/k when k < 1 so that the shells keep
    /// resolving the physical grid at large depth.
    bool scale_quadrature_with_depth = true;
};

/// Precomputed right-hand side operator for one grid and one model.
class RhsEngine {
  public:
    RhsEngine(const Grid& g, RhsOptions opt) : opt_(std::move(opt)), phys_(g)
    {
        opt_.setup.validate();
        opt_.quadrature.validate();
        k_ = opt_.model == Model::unconfined ? 1.0 : opt_.setup.scale();
        norm_ = Grid{g.half_width * k_, g.point_count, g.spacing * k_};
        QuadratureSpec q = opt_.quadrature;
        if (opt_.model == Model::unconfined) {
            q.eta_cutoff = g.half_width;
        } else if (opt_.scale_quadrature_with_depth && k_ < 1.0) {
            q.shells_per_unit = static_cast<int>(std::ceil(q.shells_per_unit / k_));
        }
        if (opt_.model == Model::regularized) {
            if (!opt_.reg) throw ContractError("regularized model needs regularization parameters");
            eps_ = opt_.reg->eps;
            build_linear_part();
        }
        const QuadratureRule rule(q);
        shells_.reserve(rule.size());
        for (const auto& n : rule.nodes) {
            Shell s;
            s.eta = n.eta;
            s.weight = n.weight;
            s.minus = make_tap(shift_stencil(-n.eta, norm_.spacing));
            s.plus = make_tap(shift_stencil(n.eta, norm_.spacing));
            s.tanh_half = n.tanh_half;
            s.sinh_half_sq = n.sinh_half_sq;
            s.sech_half_sq = n.sech_half_sq;
            s.a = std::exp(eps_ * n.log_tanh_half);
            s.b = 1.0 / s.a;
            shells_.push_back(s);
        }
    }

    [[nodiscard]] const Grid& grid() const noexcept { return phys_; }
    [[nodiscard]] const RhsOptions& options() const noexcept { return opt_; }
    [[nodiscard]] std::size_t shell_count() const noexcept { return shells_.size(); }

    /// Physical right-hand side.
    [[nodiscard]] GridProfile operator()(const GridProfile& f) const
    {
        if (f.size() != phys_.size()) throw ContractError("profile grid does not match the engine grid");
        GridProfile g(norm_);
        double amp = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (!std::isfinite(f[j])) throw NonFiniteValue("non-finite profile value at x = " + std::to_string(f.grid.node(j)));
            g[j] = k_ * f[j];
            amp = std::max(amp, std::abs(g[j]));
        }
        if (opt_.model != Model::unconfined && amp >= half_pi - wall_guard) {
            std::ostringstream os;
            os << "wall contact: normalized amplitude " << amp << " within " << wall_guard << " of pi/2";
            throw WallContact(os.str());
        }
        GridProfile out(phys_);
        const double factor = opt_.model == Model::unconfined ? opt_.setup.prefactor() : 0.5 * opt_.setup.prefactor();
        const Work w = prepare(g);
        parallel_for(f.size(), opt_.exec, [&](std::size_t j) { out[j] = factor * normalized_at(w, j); });
        if (linear_) {
            const GridProfile lin = linear_->apply(g);
            for (std::size_t j = 0; j < f.size(); ++j) out[j] += factor * lin[j];
        }
        return out;
    }

  private:
    /// Offsets are into the tripled profile buffer, so no index wraps.
    struct Tap {
        std::size_t offset = 0;              // first stencil point is ext[j + offset]
        std::array<double, 4> value{};       // weights, or deviations when near
        std::array<double, 4> slope{};       // d/dx weights
        bool near = false;                   // value holds deviations from the unit vector at j
    };
    struct Shell {
        double eta = 0.0;
        double weight = 0.0;
        Tap minus;  // samples x - eta
        Tap plus;   // samples x + eta
        double tanh_half = 0.0;
        double sinh_half_sq = 0.0;
        double sech_half_sq = 0.0;
        double a = 1.0;  // tanh(eta/2)^eps
        double b = 1.0;  // tanh(eta/2)^-eps
    };

    void build_linear_part()
    {
        const auto& r = *opt_.reg;
        CirculantOperator lin{norm_, std::vector<double>(norm_.size(), 0.0)};
        auto add = [&](double scale, FracVariant v, int mult) {
            FracOpSpec s{r.eps, v, opt_.quadrature, mult};
            lin.axpy(scale, build_operator(norm_, s));
        };
        add(-r.eps * r.alpha2, FracVariant::lambda_pow, 1);
        add(-r.eps * r.alpha3, FracVariant::lambda_pow, 3);
        add(-1.0, FracVariant::lambda_diff, 1);
        add(-r.alpha4, FracVariant::lambda_diff, 3);
        const double h2 = norm_.spacing * norm_.spacing;
        lin.coeff[0] += -2.0 * r.eps / h2;
        lin.coeff[1] += r.eps / h2;
        lin.coeff[norm_.size() - 1] += r.eps / h2;
        linear_ = std::move(lin);
    }

    Tap make_tap(const ShiftStencil& st) const
    {
        const auto n = static_cast<std::ptrdiff_t>(norm_.size());
        Tap t;
        const std::ptrdiff_t first = st.base - 1;
        t.offset = static_cast<std::size_t>(((first % n) + n) % n + n);
        t.slope = st.weights.slope;
        for (double& w : t.slope) w /= norm_.spacing;
        if (st.base == 0) {
            t.near = true;
            t.value = catmull_rom_deviation(st.frac);
        } else if (st.base == -1) {
            t.near = true;
            const auto d = catmull_rom_deviation(st.frac_complement);
            t.value = {d[3], d[2], d[1], d[0]};
        } else {
            t.value = st.weights.value;
        }
        return t;
    }

    /// Per-evaluation view of the normalized profile.
    struct Work {
        std::vector<double> ext;    // g repeated three times plus padding
        std::vector<double> slope;  // centered differences
        std::vector<double> tan_g;  // tan(g_j)
        const GridProfile* g = nullptr;
    };

    Work prepare(const GridProfile& g) const
    {
        const std::size_t n = g.size();
        Work w;
        w.g = &g;
        w.ext.resize(3 * n + 4);
        for (std::size_t i = 0; i < w.ext.size(); ++i) w.ext[i] = g[i % n];
        w.slope.resize(n);
        w.tan_g.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            w.slope[j] = g.slope(j);
            w.tan_g[j] = std::tan(g[j]);
        }
        return w;
    }

    double integrand(const Work& w, std::size_t j, const Shell& s, int sign) const
    {
        const Tap& tap = sign > 0 ? s.minus : s.plus;
        const double* p = w.ext.data() + j + tap.offset;
        const double gj = (*w.g)[j];
        double d = tap.value[0] * p[0] + tap.value[1] * p[1] + tap.value[2] * p[2] + tap.value[3] * p[3];
        if (!tap.near) d -= gj;  // g(x - sign eta) - g(x)
        const double dfx = w.slope[j];
        const double eta = sign * s.eta;
        const bool needs_slope = opt_.model == Model::unconfined || opt_.form == RhsForm::original;
        const double dfs =
            needs_slope ? tap.slope[0] * p[0] + tap.slope[1] * p[1] + tap.slope[2] * p[2] + tap.slope[3] * p[3] : 0.0;
        if (opt_.model == Model::unconfined) return (dfx - dfs) * eta / (eta * eta + d * d);

        // theta = -d/2, theta_bar = g + d/2; tan(theta_bar) by the addition formula.
        const double tn = -std::tan(0.5 * d);
        const double tg = w.tan_g[j];
        const double tb = (tg - tn) / (1.0 + tg * tn);
        const double t = sign * s.tanh_half;
        const double v = tb * t * s.b;
        if (opt_.model == Model::regularized && opt_.form == RhsForm::original) {
            return (dfx - dfs) * (1.0 + tn * tn) * s.a * t / (t * t + tn * tn * s.a * s.a) +
                   (dfx + dfs) * (1.0 + tb * tb) * t * s.b / (1.0 + v * v);
        }
        const double xi1 = (dfx * (1.0 + tn * tn) * s.a / t + (eps_ - 1.0) * tn * s.a / s.sinh_half_sq) * (t * t) /
                           (t * t + tn * tn * s.a * s.a);
        const double xi2 = (dfx * (1.0 + tb * tb) * t * s.b + s.sech_half_sq * (1.0 - eps_) * tb * s.b) / (1.0 + v * v);
        return xi1 + xi2;
    }

    double normalized_at(const Work& w, std::size_t j) const
    {
        CompensatedSum acc;
        for (const auto& s : shells_) acc.add(s.weight * (integrand(w, j, s, +1) + integrand(w, j, s, -1)));
        double value = acc.value();
        if (!std::isfinite(value)) report_non_finite(w, j);
        const double gj = (*w.g)[j];
        if (opt_.model == Model::confined) {
            value -= 4.0 * gj;
        } else if (opt_.model == Model::regularized) {
            const double damp = std::sqrt(eps_) * opt_.reg->alpha1;
            value -= (opt_.form == RhsForm::expanded ? 4.0 + damp : damp) * gj;
        }
        return value;
    }

    [[noreturn]] void report_non_finite(const Work& w, std::size_t j) const
    {
        for (const auto& s : shells_)
            for (int sign : {1, -1})
                if (!std::isfinite(integrand(w, j, s, sign))) {
                    std::ostringstream os;
                    os << "non-finite integrand at x = " << phys_.node(j) << ", eta = " << sign * s.eta / k_;
                    throw NonFiniteValue(os.str());
                }
        throw NonFiniteValue("non-finite quadrature sum at x = " + std::to_string(phys_.node(j)));
    }

    RhsOptions opt_;
    Grid phys_;
    Grid norm_{};
    double k_ = 1.0;
    double eps_ = 0.0;
    std::vector<Shell> shells_;
    std::optional<CirculantOperator> linear_;
};

inline GridProfile rhs_confined(const GridProfile& f, const PhysicalSetup& setup = {}, const QuadratureSpec& q = {},
                                Execution exec = {})
{
    return RhsEngine(f.grid, {Model::confined, RhsForm::expanded, setup, std::nullopt, q, exec})(f);
}

inline GridProfile rhs_unconfined(const GridProfile& f, const QuadratureSpec& q = {}, const PhysicalSetup& setup = {},
                                  Execution exec = {})
{
    return RhsEngine(f.grid, {Model::unconfined, RhsForm::expanded, setup, std::nullopt, q, exec})(f);
}

inline GridProfile rhs_regularized(const GridProfile& f, const PhysicalSetup& setup, const RegularizationParams& reg,
                                   const QuadratureSpec& q = {}, RhsForm form = RhsForm::expanded, Execution exec = {})
{
    return RhsEngine(f.grid, {Model::regularized, form, setup, reg, q, exec})(f);
}

// ---------------------------------------------------------------------------
// Time stepping

inline void require_finite(const GridProfile& f, const char* stage)
{
    for (std::size_t j = 0; j < f.size(); ++j)
        if (!std::isfinite(f[j]))
            throw NonFiniteValue(std::string("non-finite value in RK4 ") + stage + " at x = " +
                                 std::to_string(f.grid.node(j)));
}

template <class Rhs>
GridProfile step_rk4(const GridProfile& f, double dt, Rhs&& rhs)
{
    if (!(dt > 0.0)) throw ContractError("time step must be positive");
    const std::size_t n = f.size();
    auto shifted = [&](const GridProfile& k, double c) {
        GridProfile s = f;
        for (std::size_t j = 0; j < n; ++j) s[j] += c * k[j];
        return s;
    };
    const GridProfile k1 = rhs(f);
    require_finite(k1, "stage 1");
    const GridProfile k2 = rhs(shifted(k1, 0.5 * dt));
    require_finite(k2, "stage 2");
    const GridProfile k3 = rhs(shifted(k2, 0.5 * dt));
    require_finite(k3, "stage 3");
    const GridProfile k4 = rhs(shifted(k3, dt));
    require_finite(k4, "stage 4");
    GridProfile out = f;
    for (std::size_t j = 0; j < n; ++j) out[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return out;
}

struct DtPolicy {
    double c_parab = 0.2;
    double c_transport = 0.5;
    /// Fraction of the RK4 stability interval on the negative axis (about 2.785)
    /// allowed for the estimated spectral radius.
    double c_stability = 2.0;
    std::optional<double> fixed_dt;
};

/// Largest decay rate of the linearization about f over a few high modes,
/// measured by finite differences of the actual right-hand side.
inline double spectral_radius_estimate(const RhsEngine& rhs, const GridProfile& f)
{
    const std::size_t n = f.size();
    const GridProfile base = rhs(f);
    const double delta = 1e-7;
    double rho = 0.0;
    for (std::size_t mode : {n / 2, n / 3, n / 4, n / 8}) {
        GridProfile p = f;
        for (std::size_t j = 0; j < n; ++j)
            p[j] += delta * std::cos(2.0 * std::numbers::pi * static_cast<double>(mode * j) / static_cast<double>(n));
        const GridProfile r = rhs(p);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            num += (r[j] - base[j]) * (r[j] - base[j]);
            den += (p[j] - f[j]) * (p[j] - f[j]);
        }
        rho = std::max(rho, std::sqrt(num / den));
    }
    return rho;
}

inline double choose_dt(const RhsEngine& rhs, const GridProfile& f0, const DtPolicy& policy, double final_time)
{
    double dt = 0.0;
    if (policy.fixed_dt) {
        dt = *policy.fixed_dt;
        if (!(dt > 0.0)) throw ContractError("fixed dt must be positive");
    } else {
        const double h = rhs.grid().spacing;
        const double eps = rhs.options().reg ? rhs.options().reg->eps : 0.0;
        dt = std::min(policy.c_parab * h * h / std::max(eps, h * h), policy.c_transport * h);
        const double rho = spectral_radius_estimate(rhs, f0);
        if (rho > 0.0) dt = std::min(dt, policy.c_stability / rho);
    }
    const double steps = std::ceil(final_time / dt - 1e-9);
    return final_time / std::max(steps, 1.0);
}

enum class RunStatus { completed, wall_contact, blow_up_guard };

inline const char* to_string(RunStatus s) noexcept
{
    switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::wall_contact: return "wall_contact";
    case RunStatus::blow_up_guard: return "blow_up_guard";
    }
    return "unknown";
}

struct Snapshot {
    double time = 0.0;
    GridProfile profile;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    RunStatus status = RunStatus::completed;
    std::string message;
    double dt = 0.0;
    std::size_t steps = 0;
};

struct IntegrateOptions {
    double final_time = 1.0;
    DtPolicy dt{};
    std::size_t snapshot_stride = 1;
    double slope_guard = 10.0;
    /// Invoked on the initial profile and after every accepted step.
    std::function<void(double, const GridProfile&)> observer;
};

inline Trajectory integrate(const GridProfile& f0, const RhsEngine& rhs, const IntegrateOptions& opt)
{
    if (!(opt.final_time > 0.0)) throw ContractError("final time must be positive");
    if (opt.snapshot_stride == 0) throw ContractError("snapshot stride must be positive");
    Trajectory traj;
    traj.dt = choose_dt(rhs, f0, opt.dt, opt.final_time);
    const auto total = static_cast<std::size_t>(std::llround(opt.final_time / traj.dt));
    GridProfile f = f0;
    traj.snapshots.push_back({0.0, f});
    if (opt.observer) opt.observer(0.0, f);
    for (std::size_t step = 1; step <= total; ++step) {
        try {
            f = step_rk4(f, traj.dt, rhs);
        } catch (const WallContact& e) {
            traj.status = RunStatus::wall_contact;
            traj.message = e.what();
            break;
        } catch (const NonFiniteValue& e) {
            traj.status = RunStatus::blow_up_guard;
            traj.message = e.what();
            break;
        }
        const double t = step == total ? opt.final_time : static_cast<double>(step) * traj.dt;
        traj.steps = step;
        if (slope_sup_norm(f) > opt.slope_guard) {
            traj.status = RunStatus::blow_up_guard;
            traj.message = "slope exceeded guard " + std::to_string(opt.slope_guard) + " at t = " + std::to_string(t);
            traj.snapshots.push_back({t, f});
            break;
        }
        if (opt.observer) opt.observer(t, f);
        if (step % opt.snapshot_stride == 0 || step == total) traj.snapshots.push_back({t, f});
    }
    return traj;
}

}  // namespace muskat
