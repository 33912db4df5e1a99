#pragma once
/// @file config.hpp
/// @brief Strict JSON run configuration and its resolution into module types.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "diagnostics.hpp"
#include "dynamics.hpp"
#include "grid.hpp"
#include "kernels.hpp"

namespace muskat {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

struct AlphaOverrides {
    std::optional<double> alpha1;
    std::optional<double> alpha2;
    std::optional<double> alpha3;
    std::optional<double> alpha4;
};

struct RunConfig {
    // grid
    double half_width = 40.0;
    std::size_t points = 512;
    // setup
    PhysicalSetup setup{};
    // datum
    InitialDatumSpec datum{};
    bool mollify = false;
    // model
    Model model = Model::regularized;
    RhsForm form = RhsForm::expanded;
    double eps = 0.05;
    AlphaOverrides alphas;  // unset entries are derived from the datum
    QuadratureSpec quadrature{};
    // time
    double final_time = 1.0;
    DtPolicy dt{};
    std::size_t snapshot_stride = 10;
    double slope_guard = 10.0;
    // diagnostics
    double tol = 1e-6;
    double allowance = 0.0;
    double sign_tol = 1e-8;
    std::optional<MonitorMode> mode;  // unset: follow the classification
    // classify
    std::optional<double> classify_amp;
    std::optional<double> classify_slope;
    // studies
    std::vector<double> eps_list{0.08, 0.04, 0.02, 0.01};
    std::vector<double> l_list{half_pi / 2, half_pi, 2 * half_pi, 4 * half_pi};
    double study_slack = 0.2;
    // operator tests
    std::size_t op_points = 256;
    double op_half_width = 20.0;
    double op_eps = 0.05;
    std::size_t op_vectors = 100;
    // outputs
    std::string output_dir = "out";
    bool write_csv = true;
    bool write_json = true;
    bool write_trajectory = true;

    json source;  // the document as read

    [[nodiscard]] Grid grid() const { return make_grid(half_width, points); }

    /// Normalized amplitude k ||f0||_inf of the sampled datum.
    [[nodiscard]] double normalized_amplitude() const
    {
        return setup.scale() * sup_norm(sample_profile(datum, grid()));
    }

    [[nodiscard]] RegularizationParams regularization() const
    {
        RegularizationParams p = RegularizationParams::defaults(eps, normalized_amplitude());
        if (alphas.alpha1) p.alpha1 = *alphas.alpha1;
        if (alphas.alpha2) p.alpha2 = *alphas.alpha2;
        if (alphas.alpha3) p.alpha3 = *alphas.alpha3;
        if (alphas.alpha4) p.alpha4 = *alphas.alpha4;
        return p;
    }
};

namespace detail {

/// Rejects any key of obj outside allowed, naming the offending key.
inline void require_keys(const json& obj, const std::string& block, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ConfigError("'" + block + "' must be a JSON object");
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!names.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + (block.empty() ? "config" : "'" + block + "'"));
}

template <class T>
void read(const json& obj, const char* key, T& out)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline void read(const json& obj, const char* key, std::optional<double>& out)
{
    if (!obj.contains(key)) return;
    double v = 0.0;
    read(obj, key, v);
    out = v;
}

inline void read_count(const json& obj, const char* key, std::size_t& out)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
    out = v.get<std::size_t>();
}

inline DatumFamily parse_family(const std::string& s)
{
    if (s == "gaussian_bump") return DatumFamily::gaussian_bump;
    if (s == "sine_packet") return DatumFamily::sine_packet;
    if (s == "constant") return DatumFamily::constant;
    if (s == "custom_table") return DatumFamily::custom_table;
    throw ConfigError("unknown datum family '" + s + "'");
}

inline const char* family_name(DatumFamily f)
{
    switch (f) {
    case DatumFamily::gaussian_bump: return "gaussian_bump";
    case DatumFamily::sine_packet: return "sine_packet";
    case DatumFamily::constant: return "constant";
    case DatumFamily::custom_table: return "custom_table";
    }
    return "unknown";
}

inline const char* model_name(Model m)
{
    switch (m) {
    case Model::confined: return "confined";
    case Model::unconfined: return "unconfined";
    case Model::regularized: return "regularized";
    }
    return "unknown";
}

}  // namespace detail

inline RunConfig parse_config(const json& doc)
{
    using detail::read;
    detail::require_keys(doc, "", {"grid", "setup", "datum", "model", "regularization", "quadrature", "time",
                                   "diagnostics", "classify", "study", "operator_tests", "outputs"});
    RunConfig c;
    c.source = doc;
    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        detail::require_keys(g, "grid", {"L", "n"});
        read(g, "L", c.half_width);
        detail::read_count(g, "n", c.points);
    }
    if (doc.contains("setup")) {
        const json& s = doc["setup"];
        detail::require_keys(s, "setup", {"l", "density_jump"});
        read(s, "l", c.setup.depth);
        read(s, "density_jump", c.setup.density_jump);
    }
    if (doc.contains("datum")) {
        const json& d = doc["datum"];
        detail::require_keys(d, "datum", {"family", "amplitude", "width", "wavenumber", "center", "table", "mollify"});
        std::string family = detail::family_name(c.datum.family);
        read(d, "family", family);
        c.datum.family = detail::parse_family(family);
        read(d, "amplitude", c.datum.amplitude);
        read(d, "width", c.datum.width);
        read(d, "wavenumber", c.datum.wavenumber);
        read(d, "center", c.datum.center);
        read(d, "table", c.datum.table);
        read(d, "mollify", c.mollify);
    }
    if (doc.contains("model")) {
        const json& m = doc["model"];
        detail::require_keys(m, "model", {"kind", "form"});
        std::string kind = detail::model_name(c.model);
        read(m, "kind", kind);
        if (kind == "confined") c.model = Model::confined;
        else if (kind == "unconfined") c.model = Model::unconfined;
        else if (kind == "regularized") c.model = Model::regularized;
        else throw ConfigError("unknown model kind '" + kind + "'");
        std::string form = c.form == RhsForm::expanded ? "expanded" : "original";
        read(m, "form", form);
        if (form == "expanded") c.form = RhsForm::expanded;
        else if (form == "original") c.form = RhsForm::original;
        else throw ConfigError("unknown rhs form '" + form + "'");
    }
    if (doc.contains("regularization")) {
        const json& r = doc["regularization"];
        detail::require_keys(r, "regularization", {"eps", "alphas"});
        read(r, "eps", c.eps);
        if (r.contains("alphas")) {
            const json& a = r["alphas"];
            if (a.is_string()) {
                if (a.get<std::string>() != "auto") throw ConfigError("'alphas' must be \"auto\" or an object");
            } else {
                detail::require_keys(a, "alphas", {"alpha1", "alpha2", "alpha3", "alpha4"});
                read(a, "alpha1", c.alphas.alpha1);
                read(a, "alpha2", c.alphas.alpha2);
                read(a, "alpha3", c.alphas.alpha3);
                read(a, "alpha4", c.alphas.alpha4);
            }
        }
    }
    if (doc.contains("quadrature")) {
        const json& q = doc["quadrature"];
        detail::require_keys(q, "quadrature", {"eta_cutoff", "shells_per_unit", "inner_refinement"});
        read(q, "eta_cutoff", c.quadrature.eta_cutoff);
        read(q, "shells_per_unit", c.quadrature.shells_per_unit);
        read(q, "inner_refinement", c.quadrature.inner_refinement);
    }
    if (doc.contains("time")) {
        const json& t = doc["time"];
        detail::require_keys(t, "time",
                             {"T", "dt", "c_parab", "c_transport", "c_stability", "snapshot_stride", "slope_guard"});
        read(t, "T", c.final_time);
        std::optional<double> dt;
        read(t, "dt", dt);
        c.dt.fixed_dt = dt;
        read(t, "c_parab", c.dt.c_parab);
        read(t, "c_transport", c.dt.c_transport);
        read(t, "c_stability", c.dt.c_stability);
        detail::read_count(t, "snapshot_stride", c.snapshot_stride);
        read(t, "slope_guard", c.slope_guard);
    }
    if (doc.contains("diagnostics")) {
        const json& d = doc["diagnostics"];
        detail::require_keys(d, "diagnostics", {"tol", "allowance", "sign_tol", "mode"});
        read(d, "tol", c.tol);
        read(d, "allowance", c.allowance);
        read(d, "sign_tol", c.sign_tol);
        if (d.contains("mode")) {
            std::string mode;
            read(d, "mode", mode);
            if (mode == "MaxPrinciple") c.mode = MonitorMode::MaxPrinciple;
            else if (mode == "UniformBound") c.mode = MonitorMode::UniformBound;
            else if (mode == "AmplitudeOnly") c.mode = MonitorMode::AmplitudeOnly;
            else if (mode != "auto") throw ConfigError("unknown diagnostics mode '" + mode + "'");
        }
    }
    if (doc.contains("classify")) {
        const json& k = doc["classify"];
        detail::require_keys(k, "classify", {"amp", "slope"});
        read(k, "amp", c.classify_amp);
        read(k, "slope", c.classify_slope);
    }
    if (doc.contains("study")) {
        const json& s = doc["study"];
        detail::require_keys(s, "study", {"eps_list", "l_list", "slack"});
        read(s, "eps_list", c.eps_list);
        read(s, "l_list", c.l_list);
        read(s, "slack", c.study_slack);
    }
    if (doc.contains("operator_tests")) {
        const json& o = doc["operator_tests"];
        detail::require_keys(o, "operator_tests", {"n", "L", "eps", "vectors"});
        detail::read_count(o, "n", c.op_points);
        read(o, "L", c.op_half_width);
        read(o, "eps", c.op_eps);
        detail::read_count(o, "vectors", c.op_vectors);
    }
    if (doc.contains("outputs")) {
        const json& o = doc["outputs"];
        detail::require_keys(o, "outputs", {"directory", "formats", "trajectory"});
        read(o, "directory", c.output_dir);
        if (o.contains("formats")) {
            std::vector<std::string> formats;
            read(o, "formats", formats);
            c.write_csv = c.write_json = false;
            for (const auto& f : formats) {
                if (f == "csv") c.write_csv = true;
                else if (f == "json") c.write_json = true;
                else throw ConfigError("unknown output format '" + f + "'");
            }
        }
        read(o, "trajectory", c.write_trajectory);
    }
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

/// Fully resolved configuration, including derived alphas, for echoing into outputs.
inline json resolved_json(const RunConfig& c)
{
    json j;
    j["grid"] = {{"L", c.half_width}, {"n", c.points}};
    j["setup"] = {{"l", c.setup.depth}, {"density_jump", c.setup.density_jump}};
    j["datum"] = {{"family", detail::family_name(c.datum.family)},
                  {"amplitude", c.datum.amplitude},
                  {"width", c.datum.width},
                  {"wavenumber", c.datum.wavenumber},
                  {"center", c.datum.center},
                  {"mollify", c.mollify}};
    if (c.datum.family == DatumFamily::custom_table) j["datum"]["table"] = c.datum.table;
    j["model"] = {{"kind", detail::model_name(c.model)}, {"form", c.form == RhsForm::expanded ? "expanded" : "original"}};
    if (c.model == Model::regularized) {
        const RegularizationParams p = c.regularization();
        j["regularization"] = {{"eps", p.eps},
                               {"alphas",
                                {{"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"alpha3", p.alpha3}, {"alpha4", p.alpha4}}}};
    }
    j["quadrature"] = {{"eta_cutoff", c.quadrature.eta_cutoff},
                       {"shells_per_unit", c.quadrature.shells_per_unit},
                       {"inner_refinement", c.quadrature.inner_refinement}};
    j["time"] = {{"T", c.final_time},
                 {"c_parab", c.dt.c_parab},
                 {"c_transport", c.dt.c_transport},
                 {"c_stability", c.dt.c_stability},
                 {"snapshot_stride", c.snapshot_stride},
                 {"slope_guard", c.slope_guard}};
    if (c.dt.fixed_dt) j["time"]["dt"] = *c.dt.fixed_dt;
    j["diagnostics"] = {{"tol", c.tol},
                        {"allowance", c.allowance},
                        {"sign_tol", c.sign_tol},
                        {"mode", c.mode ? to_string(*c.mode) : "auto"}};
    return j;
}

}  // namespace muskat
