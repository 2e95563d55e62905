// qdfsim: command-line front end: theory sweeps, HBT simulation, lifetime fits.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "qdf/analysis.hpp"
#include "qdf/correlations.hpp"
#include "qdf/dynamics.hpp"
#include "qdf/error.hpp"
#include "qdf/io.hpp"
#include "qdf/photostream.hpp"
#include "qdf/regression.hpp"
#include "qdf/time_grid.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qdf;
using qdfsim::RunConfig;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kRuntimeError = 1, kUsageError = 2, kNotConverged = 3 };

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string data_path;
    std::uint64_t seed{0};
    int jobs{0};
    double epsilon{0.0};
    bool check_convergence{true};
};

class Run {
public:
    Run(std::string command, RunConfig cfg, fs::path dir)
        : command_(std::move(command)), cfg_(std::move(cfg)), dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    RunConfig& config() { return cfg_; }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir_ / name).string());
        out.precision(17);
        outputs_.push_back(name);
        return out;
    }

    void note_convergence(bool ok) { converged_ = converged_ && ok; }
    bool converged() const { return converged_; }
    json& extra() { return extra_; }

    void finish() {
        json meta;
        meta["tool"] = "qdfsim";
        meta["version"] = kVersion;
        meta["command"] = command_;
        meta["seed"] = cfg_.seed;
        meta["config"] = qdfsim::to_json(cfg_);
        meta["outputs"] = outputs_;
        meta["converged"] = converged_;
        if (!extra_.is_null()) meta["results"] = extra_;
        std::ofstream out(dir_ / (command_ + ".meta.json"));
        if (!out) throw Error(ErrorCode::IoError, "cannot write metadata in " + dir_.string());
        out << meta.dump(2) << '\n';
    }

private:
    std::string command_;
    RunConfig cfg_;
    fs::path dir_;
    std::vector<std::string> outputs_;
    bool converged_{true};
    json extra_;
};

std::string tag(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
}

SystemModel build(const RunConfig& c, const GaussianPulse& pulse) {
    if (c.system == qdfsim::SystemKind::TwoLevel) return build_two_level(c.two_level, pulse);
    return build_biexciton(c.biexciton, pulse, c.polarization);
}

SweepSetup sweep_setup(const RunConfig& c) {
    SweepSetup s;
    s.builder = [c](const GaussianPulse& p) { return build(c, p); };
    s.observed = c.observed;
    s.sensor = c.sensor;
    s.area = c.pulse.area;
    s.options = c.filter;
    return s;
}

void write_sweeps(Run& run, const std::vector<SweepResult>& curves, const std::string& prefix,
                  const std::string& curve_key) {
    json summary = json::array();
    for (const auto& r : curves) {
        const std::string name = prefix + tag(r.parameters.at(curve_key)) + ".csv";
        auto out = run.open(name);
        write_sweep_csv(out, r);
        for (bool ok : r.converged) run.note_convergence(ok);
        summary.push_back({{"file", name}, {"parameters", r.parameters}});
    }
    run.extra()["curves"] = summary;
}

// --------------------------------------------------------------------------

void cmd_g2map(Run& run) {
    auto& c = run.config();
    if (c.system != qdfsim::SystemKind::TwoLevel)
        throw Error(ErrorCode::ConfigError, "g2map needs system: two_level");
    const SystemModel m = build(c, c.pulse);
    const double horizon = c.filter.horizon > 0.0 ? c.filter.horizon : default_horizon(m);
    c.filter.horizon = horizon;
    const TimeGrid grid = correlation_grid(m, horizon, c.filter.grid_density);
    const auto r = two_time_g2_map(m, m.output("sigma"), grid.nodes, c.filter.integrator,
                                   c.filter.execution);
    auto out = run.open("g2map.csv");
    write_correlation_csv(out, r.g2);
    auto n = run.open("intensity.csv");
    n << "time,intensity,weight\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        n << grid.nodes[i] << ',' << r.intensity[i] << ',' << grid.weights[i] << '\n';
    run.extra()["grid_points"] = grid.size();
    run.extra()["pair_integral"] = integrate_map(r.g2, grid.weights);
}

void cmd_spectrum(Run& run) {
    auto& c = run.config();
    if (!c.sensor_bandwidth_given) c.sensor.bandwidth = 0.2;
    if (!c.axis.given) c.axis.values = linspace(-60.0, 60.0, 241);
    if (!c.curves.given) c.curves.values = {0.02, 0.05, 0.2};
    json summary = json::array();
    for (double tau : c.curves.values) {
        GaussianPulse p = c.pulse;
        p.length = tau;
        if (c.pulse.offset) p.offset = c.pulse.offset;
        const auto s = spectrum(build(c, p), c.observed, c.axis.values, c.sensor.bandwidth, c.sensor,
                                c.filter);
        const std::string name = "spectrum_tau" + tag(tau) + ".csv";
        auto out = run.open(name);
        write_spectrum_csv(out, s);
        summary.push_back({{"file", name}, {"pulse_length", tau}});
    }
    run.extra()["curves"] = summary;
}

void cmd_sweep_pulse(Run& run) {
    auto& c = run.config();
    if (!c.axis.given) c.axis.values = logspace(0.01, 1.0, 13);
    if (!c.curves.given) c.curves.values = {0.1, 1.0, 20.0};
    write_sweeps(run, sweep_pulse_length(sweep_setup(c), c.axis.values, c.curves.values),
                 "sweep_pulse_Gamma", "bandwidth");
}

void cmd_sweep_filter(Run& run) {
    auto& c = run.config();
    if (!c.axis.given) c.axis.values = logspace(0.05, 100.0, 15);
    if (!c.curves.given) c.curves.values = {0.02, 0.05, 0.2};
    write_sweeps(run, sweep_filter_width(sweep_setup(c), c.axis.values, c.curves.values),
                 "sweep_filter_tau", "pulse_length");
}

void cmd_sweep_fourlevel(Run& run) {
    auto& c = run.config();
    c.system = qdfsim::SystemKind::Biexciton;
    if (!c.observed_given) c.observed = ObservationVector::exciton_v();
    if (!c.sensor_detuning_given) c.sensor.detuning = 0.5 * c.biexciton.binding_energy;
    if (!c.axis.given) c.axis.values = logspace(0.3, 10.0, 12);
    if (!c.curves.given) c.curves.values = {0.01};
    SweepSetup setup = sweep_setup(c);
    json areas = json::object();
    if (!c.area_given) {
        std::map<double, double> cache;
        for (double tau : c.curves.values)
            cache[tau] = two_photon_pi_area(c.biexciton, tau, c.filter.integrator);
        for (const auto& [tau, a] : cache) areas[tag(tau)] = a;
        setup.area_for_length = [cache](double tau) { return cache.at(tau); };
    }
    write_sweeps(run, sweep_filter_width(setup, c.axis.values, c.curves.values),
                 "sweep_fourlevel_tau", "pulse_length");
    if (!areas.empty()) run.extra()["two_photon_pi_area"] = areas;
}

json estimate_json(const G2Estimate& e) {
    return {{"g2", e.value},
            {"sigma", e.sigma},
            {"center_sum", e.center_sum},
            {"side_sum_minus", e.side_sums[0]},
            {"side_sum_plus", e.side_sums[1]},
            {"window_ns", e.window_ns}};
}

void analyze(Run& run, const CoincidenceHistogram& h) {
    const auto& c = run.config();
    const double rep = c.hbt.stream.rep_period;
    const auto e = estimate_g2(h, rep, c.hbt.window_ns, c.hbt.excluded);
    const auto sums = peak_sums(h, rep, c.hbt.window_ns, c.hbt.excluded);
    auto out = run.open("peak_sums.csv");
    out << "index,delay_ns,sum\n";
    for (const auto& s : sums) out << s.index << ',' << s.index * rep << ',' << s.sum << '\n';

    json r = estimate_json(e);
    std::size_t positive = 0;
    for (const auto& s : sums) positive += s.index >= 1;
    if (positive >= 4) {
        const auto t = dominant_tone(sums, rep);
        r["dominant_tone"] = {{"frequency_mhz", t.frequency_mhz},
                              {"power", t.power},
                              {"runner_up_power", t.runner_up_power},
                              {"resolution_mhz", t.resolution_mhz}};
    }
    const auto f = side_peak_flatness(sums);
    r["side_peak_flatness"] = {{"chi2", f.chi2}, {"dof", f.dof}, {"z", f.z}, {"flat", f.flat}};
    run.extra()["estimate"] = r;
    std::printf("g2 = %.6g +- %.3g\n", e.value, e.sigma);
}

void cmd_hbt(Run& run) {
    const auto& c = run.config();
    const auto clicks = synthesize_stream(c.hbt.stream, c.seed);
    const auto h = correlate(clicks.detector1, clicks.detector2, c.hbt.bin_ps, c.hbt.span_ps);
    auto out = run.open("histogram.csv");
    write_histogram_csv(out, h);
    run.extra()["clicks"] = {clicks.detector1.size(), clicks.detector2.size()};
    analyze(run, h);
}

void cmd_analyze(Run& run, const std::string& data) {
    std::ifstream in(data);
    if (!in) throw Error(ErrorCode::IoError, "cannot open histogram " + data);
    analyze(run, read_histogram_csv(in));
}

void cmd_fit(Run& run, const std::string& data) {
    const auto& f = run.config().fit;
    std::ifstream in(data);
    if (!in) throw Error(ErrorCode::IoError, "cannot open data " + data);
    const auto [t, y] = read_two_column_csv(in);
    require(!t.empty(), ErrorCode::IoError, "no data rows in " + data);

    const auto peak = std::max_element(y.begin(), y.end()) - y.begin();
    CascadeParams init;
    init.gamma_2x = 1.0 / f.tau_2x_ps;
    init.gamma_x = 1.0 / f.tau_x_ps;
    init.irf_sigma = f.irf_sigma_ps;
    init.offset = f.offset_ps.value_or(t[static_cast<std::size_t>(peak)]);
    // Scale the amplitude so the model peak matches the data peak.
    init.amplitude = 1.0;
    double model_peak = 0.0;
    for (double x : t) model_peak = std::max(model_peak, cascade_model(init, f.branch, x));
    init.amplitude = f.amplitude.value_or(y[static_cast<std::size_t>(peak)] / std::max(model_peak, 1e-300));

    const auto r = fit_lifetimes(t, y, init, f.branch);
    json p = {{"tau_2x_ps", 1.0 / r.params.gamma_2x},
              {"tau_2x_sigma_ps", r.uncertainties.gamma_2x / (r.params.gamma_2x * r.params.gamma_2x)},
              {"irf_sigma_ps", r.params.irf_sigma},
              {"irf_sigma_sigma_ps", r.uncertainties.irf_sigma},
              {"amplitude", r.params.amplitude},
              {"offset_ps", r.params.offset},
              {"chi2", r.chi2},
              {"chi2_reduced", r.chi2_reduced},
              {"iterations", r.iterations}};
    if (f.branch == Branch::Exciton) {
        p["tau_x_ps"] = 1.0 / r.params.gamma_x;
        p["tau_x_sigma_ps"] = r.uncertainties.gamma_x / (r.params.gamma_x * r.params.gamma_x);
    }
    auto out = run.open("fit_curve.csv");
    out << "time_ps,counts,model\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        out << t[i] << ',' << y[i] << ',' << cascade_model(r.params, f.branch, t[i]) << '\n';
    run.extra()["fit"] = p;
    std::printf("%s\n", p.dump(2).c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Filtered photon statistics of pulsed quantum emitters"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--config", o.config_path, "YAML run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", o.out_dir, "output directory (default: config 'output', $QDF_OUT_DIR, ./qdf_out)");
    app.add_option("--seed", o.seed, "random seed (overrides the config)");
    app.add_option("--jobs", o.jobs, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
    app.add_option("--epsilon", o.epsilon, "sensor coupling epsilon")->check(CLI::PositiveNumber);
    app.add_flag("--check-convergence,!--no-check-convergence", o.check_convergence,
                 "repeat every filtered g2 at epsilon/2 and fail above 0.5% change (default on)");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"g2map", "two-time G2 map of the two-level emitter"},
        {"spectrum", "time-integrated spectra for several pulse lengths"},
        {"sweep-pulse", "g2 versus pulse length for several filter widths"},
        {"sweep-filter", "g2 versus filter width for several pulse lengths"},
        {"sweep-fourlevel", "biexciton-cascade g2 versus filter width on the X_V line"},
        {"hbt-sim", "Monte Carlo HBT experiment and peak-sum g2"},
        {"analyze-histogram", "peak-sum g2, tone and flatness of a histogram CSV"},
        {"fit-lifetime", "cascade lifetime fit of a (time_ps, counts) CSV"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        if (name == "analyze-histogram" || name == "fit-lifetime")
            sub->add_option("--data", o.data_path, "input CSV")->required()->check(CLI::ExistingFile);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg = o.config_path.empty() ? RunConfig{} : qdfsim::load_config(o.config_path);
        if (app.count("--seed")) cfg.seed = o.seed;
        if (o.epsilon > 0.0) cfg.sensor.coupling = o.epsilon;
        cfg.filter.check_convergence = o.check_convergence;
        if (o.jobs > 0) omp_set_num_threads(o.jobs);

        std::string dir = o.out_dir;
        if (dir.empty()) dir = cfg.output;
        if (dir.empty())
            if (const char* env = std::getenv("QDF_OUT_DIR")) dir = env;
        if (dir.empty()) dir = "qdf_out";
        cfg.output = dir;

        Run run(command, cfg, dir);
        if (command == "g2map") cmd_g2map(run);
        else if (command == "spectrum") cmd_spectrum(run);
        else if (command == "sweep-pulse") cmd_sweep_pulse(run);
        else if (command == "sweep-filter") cmd_sweep_filter(run);
        else if (command == "sweep-fourlevel") cmd_sweep_fourlevel(run);
        else if (command == "hbt-sim") cmd_hbt(run);
        else if (command == "analyze-histogram") cmd_analyze(run, o.data_path);
        else if (command == "fit-lifetime") cmd_fit(run, o.data_path);
        run.finish();
        std::printf("wrote %s\n", (fs::path(dir) / (command + ".meta.json")).string().c_str());
        if (!run.converged()) {
            std::fprintf(stderr, "qdfsim: convergence was not verified (run without --no-check-convergence)\n");
            return kNotConverged;
        }
        return kOk;
    } catch (const Error& e) {
        std::fprintf(stderr, "qdfsim: %s\n", e.what());
        switch (e.code()) {
            case ErrorCode::ConfigError:
            case ErrorCode::InvalidArgument:
                return kUsageError;
            case ErrorCode::NotConverged:
                return kNotConverged;
            default:
                return kRuntimeError;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qdfsim: %s\n", e.what());
        return kRuntimeError;
    }
}
