#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "qdf/dynamics.hpp"
#include "qdf/error.hpp"

namespace qdfsim {

using qdf::Error;
using qdf::ErrorCode;

namespace {

std::string where(const YAML::Mark& m) {
    return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& msg) {
    throw Error(ErrorCode::ConfigError, where(node.Mark()) + ": " + msg);
}

void only_keys(const YAML::Node& map, const std::string& section, std::set<std::string> allowed) {
    if (!map.IsMap()) fail(map, "'" + section + "' must be a mapping");
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
}

template <class T>
bool read(const YAML::Node& map, const char* key, T& out) {
    const YAML::Node n = map[key];
    if (!n) return false;
    try {
        out = n.as<T>();
    } catch (const YAML::Exception&) {
        fail(n, std::string("cannot read '") + key + "'");
    }
    return true;
}

// Runs a module validator and reports its message at the section's position.
template <class F>
void check(const YAML::Node& node, F&& validate) {
    try {
        validate();
    } catch (const Error& e) {
        fail(node, e.detail());
    }
}

Axis read_axis(const YAML::Node& n, const char* name) {
    Axis a;
    if (!n) return a;
    a.given = true;
    if (n.IsSequence()) {
        try {
            a.values = n.as<std::vector<double>>();
        } catch (const YAML::Exception&) {
            fail(n, std::string("'") + name + "' must be a list of numbers");
        }
    } else {
        only_keys(n, name, {"min", "max", "points", "scale"});
        double lo = 0.0, hi = 0.0;
        int points = 0;
        std::string scale = "linear";
        if (!read(n, "min", lo) || !read(n, "max", hi) || !read(n, "points", points))
            fail(n, std::string("'") + name + "' needs min, max and points");
        read(n, "scale", scale);
        if (points < 1) fail(n, "points must be >= 1");
        if (points == 1) {
            a.values = {lo};
        } else if (scale == "log") {
            check(n, [&] { a.values = qdf::logspace(lo, hi, points); });
        } else if (scale == "linear") {
            a.values = qdf::linspace(lo, hi, points);
        } else {
            fail(n, "scale must be 'log' or 'linear'");
        }
    }
    if (a.values.empty()) fail(n, std::string("'") + name + "' is empty");
    return a;
}

void read_integrator(const YAML::Node& n, qdf::IntegratorConfig& c) {
    only_keys(n, "integrator",
              {"method", "rel_tol", "abs_tol", "max_step", "min_steps_per_pulse", "fixed_step",
               "exact_free_evolution"});
    std::string method;
    if (read(n, "method", method)) {
        if (method == "dp45")
            c.method = qdf::IntegratorMethod::AdaptiveDP45;
        else if (method == "rk4")
            c.method = qdf::IntegratorMethod::FixedRK4;
        else
            fail(n["method"], "method must be 'dp45' or 'rk4'");
    }
    read(n, "rel_tol", c.rel_tol);
    read(n, "abs_tol", c.abs_tol);
    read(n, "max_step", c.max_step);
    read(n, "min_steps_per_pulse", c.min_steps_per_pulse);
    read(n, "fixed_step", c.fixed_step);
    read(n, "exact_free_evolution", c.exact_free_evolution);
    check(n, [&] { c.validate(); });
}

void read_hbt(const YAML::Node& n, HbtSettings& h) {
    only_keys(n, "hbt",
              {"rep_period_ns", "n_pulses", "p_single", "p_double", "lifetime_ns", "pulse_sigma_ns",
               "noise_rate_hz", "detection_efficiency", "blinking", "bin_ps", "span_ps", "window_ns",
               "exclude"});
    auto& s = h.stream;
    read(n, "rep_period_ns", s.rep_period);
    read(n, "n_pulses", s.n_pulses);
    read(n, "p_single", s.p_single);
    read(n, "p_double", s.p_double);
    read(n, "lifetime_ns", s.emitter_lifetime);
    read(n, "pulse_sigma_ns", s.pulse_sigma);
    read(n, "noise_rate_hz", s.noise_rate);
    read(n, "detection_efficiency", s.detection_efficiency);
    if (const auto b = n["blinking"]) {
        only_keys(b, "blinking", {"frequencies_mhz", "depth"});
        qdf::BlinkingConfig bc;
        read(b, "frequencies_mhz", bc.frequencies_mhz);
        read(b, "depth", bc.depth);
        s.blinking = bc;
    }
    read(n, "bin_ps", h.bin_ps);
    read(n, "span_ps", h.span_ps);
    read(n, "window_ns", h.window_ns);
    if (const auto ex = n["exclude"]) {
        if (!ex.IsSequence()) fail(ex, "'exclude' must be a list");
        for (const auto& e : ex) {
            only_keys(e, "exclude entry", {"position_ns", "half_width_ns"});
            qdf::ExcludedPeak p;
            read(e, "position_ns", p.position_ns);
            read(e, "half_width_ns", p.half_width_ns);
            if (p.half_width_ns < 0.0) fail(e, "half_width_ns must be >= 0");
            h.excluded.push_back(p);
        }
    }
    check(n, [&] { s.validate(); });
    if (h.bin_ps <= 0) fail(n, "bin_ps must be > 0");
    if (h.span_ps < 0) fail(n, "span_ps must be >= 0");
    if (h.window_ns <= 0.0) fail(n, "window_ns must be > 0");
    if (h.window_ns > s.rep_period) fail(n, "window_ns exceeds rep_period_ns (WindowOverlap)");
}

void read_fit(const YAML::Node& n, FitSettings& f) {
    only_keys(n, "fit", {"branch", "tau_2x_ps", "tau_x_ps", "irf_sigma_ps", "amplitude", "offset_ps"});
    std::string branch;
    if (read(n, "branch", branch)) {
        if (branch == "exciton")
            f.branch = qdf::Branch::Exciton;
        else if (branch == "biexciton")
            f.branch = qdf::Branch::Biexciton;
        else
            fail(n["branch"], "branch must be 'exciton' or 'biexciton'");
    }
    read(n, "tau_2x_ps", f.tau_2x_ps);
    read(n, "tau_x_ps", f.tau_x_ps);
    read(n, "irf_sigma_ps", f.irf_sigma_ps);
    double v = 0.0;
    if (read(n, "amplitude", v)) f.amplitude = v;
    if (read(n, "offset_ps", v)) f.offset_ps = v;
    if (f.tau_2x_ps <= 0.0 || f.tau_x_ps <= 0.0) fail(n, "lifetimes must be > 0");
    if (f.irf_sigma_ps <= 0.0) fail(n, "irf_sigma_ps must be > 0");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source_name) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ConfigError, source_name + ": " + where(e.mark) + ": " + e.msg);
    }
    RunConfig c;
    if (!root || root.IsNull()) return c;
    try {
        only_keys(root, "config",
                  {"system", "two_level", "biexciton", "pulse", "sensor", "observe", "integrator",
                   "horizon", "grid_density", "check_truncation", "sweep", "curves", "hbt", "fit",
                   "output", "seed"});

        std::string system;
        if (read(root, "system", system)) {
            if (system == "two_level")
                c.system = SystemKind::TwoLevel;
            else if (system == "biexciton")
                c.system = SystemKind::Biexciton;
            else
                fail(root["system"], "system must be 'two_level' or 'biexciton'");
        }
        if (c.system == SystemKind::Biexciton) c.observed = qdf::ObservationVector::exciton_v();

        if (const auto n = root["two_level"]) {
            only_keys(n, "two_level", {"decay_rate", "detuning"});
            read(n, "decay_rate", c.two_level.decay_rate);
            read(n, "detuning", c.two_level.detuning);
            check(n, [&] { c.two_level.validate(); });
        }
        if (const auto n = root["biexciton"]) {
            only_keys(n, "biexciton",
                      {"decay_rate", "binding_energy", "exciton_detuning", "polarization"});
            read(n, "decay_rate", c.biexciton.decay_rate);
            read(n, "binding_energy", c.biexciton.binding_energy);
            if (!read(n, "exciton_detuning", c.biexciton.exciton_detuning))
                c.biexciton.exciton_detuning =
                    qdf::two_photon_resonant_detuning(c.biexciton.binding_energy);
            if (const auto p = n["polarization"]) {
                only_keys(p, "polarization", {"theta", "phi"});
                read(p, "theta", c.polarization.theta);
                read(p, "phi", c.polarization.phi);
            }
            check(n, [&] { c.biexciton.validate(); });
        }
        if (const auto n = root["pulse"]) {
            only_keys(n, "pulse", {"area", "length", "offset"});
            c.area_given = read(n, "area", c.pulse.area);
            read(n, "length", c.pulse.length);
            double off = 0.0;
            if (read(n, "offset", off)) c.pulse.offset = off;
            check(n, [&] { c.pulse.validate(); });
        }
        if (const auto n = root["sensor"]) {
            only_keys(n, "sensor", {"detuning", "bandwidth", "coupling", "truncation"});
            c.sensor_detuning_given = read(n, "detuning", c.sensor.detuning);
            c.sensor_bandwidth_given = read(n, "bandwidth", c.sensor.bandwidth);
            read(n, "coupling", c.sensor.coupling);
            read(n, "truncation", c.sensor.truncation);
            check(n, [&] { c.sensor.validate(); });
        }
        if (const auto n = root["observe"]) {
            c.observed_given = true;
            if (n.IsScalar()) {
                c.observed = n.as<std::string>();
            } else {
                std::vector<double> eta;
                try {
                    eta = n.as<std::vector<double>>();
                } catch (const YAML::Exception&) {
                    fail(n, "'observe' must be an output name or four numbers");
                }
                if (eta.size() != 4) fail(n, "observation vector needs four entries");
                qdf::ObservationVector v;
                for (std::size_t i = 0; i < 4; ++i) v.eta[i] = eta[i];
                check(n, [&] { v.validate(); });
                c.observed = v;
            }
        }
        if (const auto n = root["integrator"]) read_integrator(n, c.filter.integrator);
        read(root, "horizon", c.filter.horizon);
        if (c.filter.horizon < 0.0) fail(root["horizon"], "horizon must be >= 0");
        read(root, "grid_density", c.filter.grid_density);
        if (c.filter.grid_density <= 0.0) fail(root["grid_density"], "grid_density must be > 0");
        read(root, "check_truncation", c.filter.check_truncation);
        c.axis = read_axis(root["sweep"], "sweep");
        c.curves = read_axis(root["curves"], "curves");
        if (const auto n = root["hbt"]) read_hbt(n, c.hbt);
        if (const auto n = root["fit"]) read_fit(n, c.fit);
        read(root, "output", c.output);
        read(root, "seed", c.seed);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, source_name + ": " + e.detail());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json j;
    j["system"] = c.system == SystemKind::TwoLevel ? "two_level" : "biexciton";
    j["two_level"] = {{"decay_rate", c.two_level.decay_rate}, {"detuning", c.two_level.detuning}};
    j["biexciton"] = {{"decay_rate", c.biexciton.decay_rate},
                      {"binding_energy", c.biexciton.binding_energy},
                      {"exciton_detuning", c.biexciton.exciton_detuning},
                      {"polarization", {{"theta", c.polarization.theta}, {"phi", c.polarization.phi}}}};
    j["pulse"] = {{"area", c.pulse.area}, {"length", c.pulse.length}, {"offset", c.pulse.center()}};
    j["sensor"] = {{"detuning", c.sensor.detuning},
                   {"bandwidth", c.sensor.bandwidth},
                   {"coupling", c.sensor.coupling},
                   {"truncation", c.sensor.truncation}};
    if (const auto* name = std::get_if<std::string>(&c.observed)) {
        j["observe"] = *name;
    } else {
        const auto& v = std::get<qdf::ObservationVector>(c.observed);
        json eta = json::array();
        for (const auto& e : v.eta) eta.push_back(e.real());
        j["observe"] = eta;
    }
    const auto& ic = c.filter.integrator;
    j["integrator"] = {
        {"method", ic.method == qdf::IntegratorMethod::AdaptiveDP45 ? "dp45" : "rk4"},
        {"rel_tol", ic.rel_tol},
        {"abs_tol", ic.abs_tol},
        {"max_step", std::isfinite(ic.max_step) ? json(ic.max_step) : json("inf")},
        {"min_steps_per_pulse", ic.min_steps_per_pulse},
        {"fixed_step", ic.fixed_step},
        {"exact_free_evolution", ic.exact_free_evolution}};
    j["horizon"] = c.filter.horizon;
    j["grid_density"] = c.filter.grid_density;
    j["check_convergence"] = c.filter.check_convergence;
    j["check_truncation"] = c.filter.check_truncation;
    j["sweep"] = c.axis.values;
    j["curves"] = c.curves.values;
    const auto& s = c.hbt.stream;
    json hbt = {{"rep_period_ns", s.rep_period},
                {"n_pulses", s.n_pulses},
                {"p_single", s.p_single},
                {"p_double", s.p_double},
                {"lifetime_ns", s.emitter_lifetime},
                {"pulse_sigma_ns", s.pulse_sigma},
                {"noise_rate_hz", s.noise_rate},
                {"detection_efficiency", s.detection_efficiency},
                {"bin_ps", c.hbt.bin_ps},
                {"span_ps", c.hbt.span_ps},
                {"window_ns", c.hbt.window_ns}};
    if (s.blinking)
        hbt["blinking"] = {{"frequencies_mhz", s.blinking->frequencies_mhz},
                           {"depth", s.blinking->depth}};
    json excluded = json::array();
    for (const auto& e : c.hbt.excluded)
        excluded.push_back({{"position_ns", e.position_ns}, {"half_width_ns", e.half_width_ns}});
    hbt["exclude"] = excluded;
    j["hbt"] = hbt;
    j["fit"] = {{"branch", c.fit.branch == qdf::Branch::Exciton ? "exciton" : "biexciton"},
                {"tau_2x_ps", c.fit.tau_2x_ps},
                {"tau_x_ps", c.fit.tau_x_ps},
                {"irf_sigma_ps", c.fit.irf_sigma_ps}};
    if (c.fit.amplitude) j["fit"]["amplitude"] = *c.fit.amplitude;
    if (c.fit.offset_ps) j["fit"]["offset_ps"] = *c.fit.offset_ps;
    j["output"] = c.output;
    j["seed"] = c.seed;
    return j;
}

}  // namespace qdfsim
