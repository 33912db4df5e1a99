// muskat_lab: command-line front-end for the confined Muskat lab.
//
// Exit codes: 0 pass, 1 config error, 2 monitored property violated,
// 3 run aborted (wall contact, blow-up guard, I/O).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <muskat/config.hpp>
#include <muskat/diagnostics.hpp>
#include <muskat/dynamics.hpp>
#include <muskat/fractional_ops.hpp>
#include <muskat/io.hpp>
#include <muskat/regions.hpp>

namespace {

using namespace muskat;

enum Exit : int { ok = 0, config_error = 1, violation = 2, aborted = 3 };

struct Globals {
    std::string config;
    std::string out;
    unsigned threads = 1;
    std::uint64_t seed = 20240601;
};

std::string output_dir(const Globals& g, const RunConfig& c)
{
    const std::string dir = g.out.empty() ? c.output_dir : g.out;
    std::filesystem::create_directories(dir);
    return dir;
}

RunConfig load(const Globals& g)
{
    if (g.config.empty()) return parse_config(json::object());
    return load_config(g.config);
}

std::optional<HypothesisReport> classify_datum(double amp, double slope, double l)
{
    try {
        return classify(amp, slope, l);
    } catch (const NoRootError&) {
        HypothesisReport r;
        r.amp = amp;
        r.slope = slope;
        r.depth = l;
        r.h3_ok = check_h3(slope);
        r.h4_ok = check_h4(amp, slope, l);
        const H5Result h5 = check_h5(amp, slope, l);
        r.h5_ok = h5.ok;
        r.h5_lhs = h5.lhs;
        r.classification = r.h3_ok && r.h4_ok && r.h5_ok ? Classification::MaxPrinciple : Classification::Outside;
        return r;
    }
}

int cmd_simulate(const Globals& g)
{
    const RunConfig c = load(g);
    const Grid grid = c.grid();
    GridProfile f0 = sample_profile(c.datum, grid);
    if (c.mollify) f0 = mollify_initial(f0, c.eps);
    const double amp = sup_norm(f0);
    if (c.datum.family != DatumFamily::constant && !decays_near_boundary(f0))
        std::cerr << "warning: datum does not decay near x = +-L; the periodic box wraps it around\n";
    c.setup.validate();
    if (c.model != Model::unconfined && !(c.setup.scale() * amp < half_pi - wall_guard))
        throw ConfigError("datum amplitude " + std::to_string(amp) + " reaches the strip wall (normalized " +
                          std::to_string(c.setup.scale() * amp) + " >= pi/2)");
    RhsOptions ro;
    ro.model = c.model;
    ro.form = c.form;
    ro.setup = c.setup;
    ro.quadrature = c.quadrature;
    ro.exec = {g.threads};
    if (c.model == Model::regularized) {
        ro.reg = c.regularization();
        ro.reg->validate(c.setup.scale() * amp);
    }
    const RhsEngine engine(grid, ro);
    IntegrateOptions io;
    io.final_time = c.final_time;
    io.dt = c.dt;
    io.snapshot_stride = c.snapshot_stride;
    io.slope_guard = c.slope_guard;
    const Trajectory traj = integrate(f0, engine, io);
    const DiagnosticsSeries series = track(traj);

    json verdict;
    verdict["config"] = resolved_json(c);
    verdict["status"] = to_string(traj.status);
    verdict["message"] = traj.message;
    verdict["dt"] = traj.dt;
    verdict["steps"] = traj.steps;

    MonitorMode mode = MonitorMode::AmplitudeOnly;
    if (c.model != Model::unconfined) {
        const auto cls = classify_datum(amp, slope_sup_norm(f0), c.setup.depth);
        verdict["classification"] = to_json(*cls);
        if (cls->classification == Classification::MaxPrinciple) mode = MonitorMode::MaxPrinciple;
        if (cls->classification == Classification::UniformBound) mode = MonitorMode::UniformBound;
    }
    if (c.mode) mode = *c.mode;
    const MonotonicityVerdict mono =
        monotonicity_report(series, mode, {c.tol, c.allowance, grid.spacing, c.sign_tol});
    verdict["monotonicity"] = to_json(mono);
    bool pass = mono.pass;
    if (c.model == Model::regularized) {
        const H3GrowthReport h3 = h3_growth_check(series);
        verdict["h3_growth"] = to_json(h3);
        pass = pass && h3.pass();
    }
    verdict["pass"] = pass;

    const std::string dir = output_dir(g, c);
    if (c.write_csv) write_series_csv(dir + "/diagnostics.csv", series);
    if (c.write_json) write_json(dir + "/verdict.json", verdict);
    if (c.write_trajectory) write_trajectory(dir + "/trajectory", traj);

    std::cout << "simulate: " << to_string(traj.status) << ", " << traj.steps << " steps of dt = " << traj.dt
              << ", mode " << to_string(mode) << ", verdict " << (pass ? "PASS" : "FAIL") << '\n';
    if (traj.status != RunStatus::completed) {
        std::cerr << traj.message << '\n';
        return aborted;
    }
    return pass ? ok : violation;
}

int cmd_classify(const Globals& g)
{
    const RunConfig c = load(g);
    double amp = 0.0;
    double slope = 0.0;
    if (c.classify_amp || c.classify_slope) {
        if (!c.classify_amp || !c.classify_slope) throw ConfigError("'classify' needs both 'amp' and 'slope'");
        amp = *c.classify_amp;
        slope = *c.classify_slope;
    } else {
        const GridProfile f0 = sample_profile(c.datum, c.grid());
        amp = sup_norm(f0);
        slope = slope_sup_norm(f0);
    }
    const auto r = classify_datum(amp, slope, c.setup.depth);
    const json j = to_json(*r);
    const std::string dir = output_dir(g, c);
    if (c.write_json) write_json(dir + "/classification.json", j);
    std::cout << j.dump(2) << '\n';
    return ok;
}

int cmd_region_boundary(const Globals& g)
{
    const RunConfig c = load(g);
    const std::string dir = output_dir(g, c);
    json rows = json::array();
    bool pass = true;
    std::ofstream csv;
    if (c.write_csv) {
        csv.open(dir + "/region_boundary.csv");
        if (!csv) throw std::runtime_error("cannot write " + dir + "/region_boundary.csv");
        csv << "l,x,y,residual1,residual2\n" << std::setprecision(17);
    }
    for (double l : c.l_list) {
        try {
            const RegionPoint p = region_boundary(l);
            pass = pass && std::abs(p.residual1) <= 1e-10 && std::abs(p.residual2) <= 1e-10;
            if (csv) csv << p.depth << ',' << p.x << ',' << p.y << ',' << p.residual1 << ',' << p.residual2 << '\n';
            rows.push_back(to_json(p));
        } catch (const NoRootError& e) {
            pass = false;
            rows.push_back({{"l", l}, {"error", e.what()}});
        }
    }
    if (c.write_json) write_json(dir + "/region_boundary.json", {{"points", rows}, {"pass", pass}});
    std::cout << "region-boundary: " << c.l_list.size() << " depths, " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? ok : violation;
}

int cmd_operator_tests(const Globals& g)
{
    const RunConfig c = load(g);
    OperatorHarnessSpec spec;
    spec.points = c.op_points;
    spec.half_width = c.op_half_width;
    spec.eps = c.op_eps;
    spec.vectors = c.op_vectors;
    spec.seed = g.seed;
    spec.quadrature = c.quadrature;
    const OperatorHarnessReport r = run_operator_harness(spec);
    const std::string dir = output_dir(g, c);
    json j = to_json(r);
    j["seed"] = g.seed;
    if (c.write_json) write_json(dir + "/operator_tests.json", j);
    if (c.write_csv)
        write_matrix_csv(dir + "/operator_matrix.csv",
                         operator_matrix(make_grid(spec.half_width, spec.points),
                                         FracOpSpec{spec.eps, FracVariant::lambda_pow, spec.quadrature}));
    std::cout << "operator-tests: " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return r.pass() ? ok : violation;
}

int cmd_converge_eps(const Globals& g)
{
    const RunConfig c = load(g);
    GridProfile f0 = sample_profile(c.datum, c.grid());
    EpsStudyOptions opt;
    opt.final_time = c.final_time;
    opt.dt = c.dt;
    opt.mollify = c.mollify;
    opt.slack = c.study_slack;
    opt.form = c.form;
    opt.exec = {g.threads};
    const AlphaOverrides over = c.alphas;
    opt.params = [over](double eps, double amp) {
        RegularizationParams p = RegularizationParams::defaults(eps, amp);
        if (over.alpha1) p.alpha1 = *over.alpha1;
        if (over.alpha2) p.alpha2 = *over.alpha2;
        if (over.alpha3) p.alpha3 = *over.alpha3;
        if (over.alpha4) p.alpha4 = *over.alpha4;
        return p;
    };
    const EpsStudyReport r = eps_convergence_study(f0, c.eps_list, c.setup, c.quadrature, opt);
    const std::string dir = output_dir(g, c);
    json j = to_json(r);
    j["config"] = resolved_json(c);
    j["config"]["study"] = {{"eps_list", c.eps_list}, {"slack", c.study_slack}};
    if (c.write_json) write_json(dir + "/eps_study.json", j);
    if (c.write_csv) {
        std::ofstream csv(dir + "/eps_distances.csv");
        csv << "eps_a,eps_b,distance\n" << std::setprecision(17);
        for (std::size_t i = 0; i < r.distances.size(); ++i)
            csv << r.runs[i].eps << ',' << r.runs[i + 1].eps << ',' << r.distances[i] << '\n';
    }
    std::cout << "converge-eps: distances";
    for (double d : r.distances) std::cout << ' ' << d;
    std::cout << (r.flagged ? " (non-monotone, flagged)" : "") << '\n';
    if (!r.all_completed) return aborted;
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical lab for the confined Muskat problem"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory (overrides outputs.directory)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "seed for randomized property tests");
    auto* sim = app.add_subcommand("simulate", "integrate one run and monitor it");
    auto* cls = app.add_subcommand("classify", "classify a datum against the smallness hypotheses");
    auto* reg = app.add_subcommand("region-boundary", "solve for the region boundary over a list of depths");
    auto* ops = app.add_subcommand("operator-tests", "property harness for the fractional operators");
    auto* eps = app.add_subcommand("converge-eps", "eps -> 0 convergence study");
    for (auto* s : {sim, cls, reg, ops, eps}) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*sim) return cmd_simulate(g);
        if (*cls) return cmd_classify(g);
        if (*reg) return cmd_region_boundary(g);
        if (*ops) return cmd_operator_tests(g);
        if (*eps) return cmd_converge_eps(g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ContractError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "run aborted: " << e.what() << '\n';
        return aborted;
    }
    return config_error;
}
