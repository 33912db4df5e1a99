#pragma once
/// @file io.hpp
/// @brief JSON views of the reports and the on-disk trajectory layout.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>

#include <json.hpp>

#include "diagnostics.hpp"
#include "dynamics.hpp"
#include "fractional_ops.hpp"
#include "regions.hpp"

namespace muskat {

inline nlohmann::json to_json(const MonotonicityVerdict& v)
{
    nlohmann::json j{{"mode", to_string(v.mode)},
                     {"pass", v.pass},
                     {"sup_ok", v.sup_ok},
                     {"slope_ok", v.slope_ok},
                     {"sign_checked", v.sign_checked},
                     {"sign_ok", v.sign_ok},
                     {"slope_increased", v.slope_increased},
                     {"max_sup_increase", v.max_sup_increase},
                     {"max_slope_increase", v.max_slope_increase},
                     {"max_slope", v.max_slope},
                     {"min_value", v.min_value},
                     {"slack", v.slack}};
    j["first_violation_time"] = v.first_violation_time ? nlohmann::json(*v.first_violation_time) : nlohmann::json();
    return j;
}

inline nlohmann::json to_json(const H3GrowthReport& r)
{
    return {{"pass", r.pass()},
            {"finite", r.finite},
            {"super_exponential", r.super_exponential},
            {"max_log_derivative", r.log_derivatives.empty() ? 0.0 : r.max_log_derivative},
            {"fitted_rate", r.fitted_rate}};
}

inline nlohmann::json to_json(const RegionPoint& p)
{
    nlohmann::json flips = nlohmann::json::array();
    for (const SignChange& s : p.sign_changes)
        flips.push_back({{"x", s.x}, {"y", s.y}, {"is_root", s.is_root}, {"residual", s.residual}});
    return {{"l", p.depth}, {"x", p.x}, {"y", p.y}, {"residual1", p.residual1}, {"residual2", p.residual2},
            {"sign_changes", flips}};
}

inline nlohmann::json to_json(const HypothesisReport& r)
{
    return {{"amp", r.amp},
            {"slope", r.slope},
            {"l", r.depth},
            {"h3", r.h3_ok},
            {"h4", r.h4_ok},
            {"h5", r.h5_ok},
            {"h5_lhs", r.h5_lhs},
            {"region_point", {{"x", r.region_point.x}, {"y", r.region_point.y}}},
            {"below_region_boundary", r.sisder2_ok},
            {"classification", to_string(r.classification)}};
}

inline nlohmann::json to_json(const EpsStudyReport& r)
{
    nlohmann::json runs = nlohmann::json::array();
    for (const EpsRun& run : r.runs)
        runs.push_back({{"eps", run.eps},
                        {"alphas", {run.params.alpha1, run.params.alpha2, run.params.alpha3, run.params.alpha4}},
                        {"status", to_string(run.trajectory.status)},
                        {"dt", run.trajectory.dt},
                        {"steps", run.trajectory.steps},
                        {"final_sup", sup_norm(run.trajectory.snapshots.back().profile)}});
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t i = 0; i < r.distances.size(); ++i)
        table.push_back({{"eps_a", r.runs[i].eps}, {"eps_b", r.runs[i + 1].eps}, {"distance", r.distances[i]}});
    return {{"runs", runs},
            {"distances", table},
            {"monotone", r.monotone},
            {"flagged", r.flagged},
            {"all_completed", r.all_completed},
            {"slack", r.slack}};
}

inline nlohmann::json to_json(const OperatorHarnessReport& r)
{
    return {{"pass", r.pass()},
            {"symmetry", {{"pass", r.symmetric()}, {"relative_asymmetry", r.asymmetry}}},
            {"positivity", {{"pass", r.positive()}, {"min_quadratic_form", r.min_quadratic}}},
            {"constants", {{"pass", r.annihilates_constants()}, {"max_row_sum", r.max_row_sum}}},
            {"eps_rate", {{"pass", r.rate_ok()}, {"eps", r.rate_eps}, {"l1", r.rate_l1}, {"slope", r.rate_slope}}},
            {"derivative_forms",
             {{"pass", r.forms_ok()},
              {"discrepancy", r.form_discrepancy},
              {"discrepancy_refined", r.form_discrepancy_refined}}},
            {"log_tanh",
             {{"pass", r.facts_ok()},
              {"inequality_holds", r.facts.inequality_holds},
              {"worst_slack", r.facts.worst_slack},
              {"integral", r.facts.integral}}}};
}

inline void write_json(const std::string& path, const nlohmann::json& j)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
}

/// dir/snapshot_NNNNN.csv with columns x,f plus dir/manifest.json.
inline void write_trajectory(const std::string& dir, const Trajectory& traj)
{
    std::filesystem::create_directories(dir);
    nlohmann::json snaps = nlohmann::json::array();
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%05zu.csv", i);
        write_profile_csv(dir + "/" + name, traj.snapshots[i].profile);
        snaps.push_back({{"time", traj.snapshots[i].time}, {"file", name}});
    }
    write_json(dir + "/manifest.json", {{"status", to_string(traj.status)},
                                        {"message", traj.message},
                                        {"dt", traj.dt},
                                        {"steps", traj.steps},
                                        {"snapshots", snaps}});
}

}  // namespace muskat
