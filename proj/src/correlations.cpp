#include "qdf/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "qdf/dynamics.hpp"
#include "qdf/error.hpp"
#include "qdf/lindblad.hpp"
#include "qdf/time_grid.hpp"

namespace qdf {

namespace {

SystemModel with_sensor(const SystemModel& system, const Observed& observed,
                        const SensorConfig& sensor) {
    if (const auto* name = std::get_if<std::string>(&observed))
        return attach_sensor(system, *name, sensor);
    return attach_sensor(system, std::get<ObservationVector>(observed), sensor);
}

struct Evaluation {
    std::vector<double> times;
    std::vector<double> n_of_t;
    double n_integral{0.0};
    double numerator{0.0};
    double horizon{0.0};
};

Evaluation evaluate(const SystemModel& system, const Observed& observed,
                    const SensorConfig& sensor, const FilterOptions& options) {
    const SystemModel m = with_sensor(system, observed, sensor);
    Evaluation ev;
    ev.horizon = options.horizon > 0.0 ? options.horizon : default_horizon(m);
    const TimeGrid grid = correlation_grid(m, ev.horizon, options.grid_density);
    const RegressionResult r =
        two_time_g2_map(m, m.output("sensor"), grid.nodes, options.integrator, options.execution);

    const double pref2 = std::pow(sensor.bandwidth / (2.0 * sensor.coupling), 2);
    ev.times = grid.nodes;
    ev.n_of_t.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ev.n_of_t[i] = pref2 * r.intensity[i];
        ev.n_integral += grid.weights[i] * ev.n_of_t[i];
    }
    ev.numerator = pref2 * pref2 * integrate_map(r.g2, grid.weights);
    return ev;
}

double ratio(const Evaluation& ev) {
    if (ev.n_integral < 1e-12)
        throw Error(ErrorCode::ZeroEmission, "time-integrated filtered population below 1e-12");
    return ev.numerator / (ev.n_integral * ev.n_integral);
}

}  // namespace

FilteredStats filtered_g2_zero(const SystemModel& system, const Observed& observed,
                               const SensorConfig& sensor, const FilterOptions& options) {
    sensor.validate();
    const Evaluation ev = evaluate(system, observed, sensor, options);

    FilteredStats s;
    s.g2 = ratio(ev);
    s.times = ev.times;
    s.n_of_t = ev.n_of_t;
    s.n_integral = ev.n_integral;
    s.g2_numerator = ev.numerator;
    s.epsilon_used = sensor.coupling;
    s.horizon = ev.horizon;

    if (options.check_convergence) {
        SensorConfig half = sensor;
        half.coupling *= 0.5;
        const double g_half = ratio(evaluate(system, observed, half, options));
        s.epsilon_change = std::abs(g_half - s.g2) / s.g2;
        if (*s.epsilon_change > 5e-3) {
            std::ostringstream msg;
            msg << "g2 changed by " << 100.0 * *s.epsilon_change << "% under epsilon -> epsilon/2"
                << " (epsilon = " << sensor.coupling << ")";
            throw Error(ErrorCode::NotConverged, msg.str());
        }
        s.converged = true;
    }
    if (options.check_truncation) {
        SensorConfig more = sensor;
        more.truncation += 1;
        const double g_more = ratio(evaluate(system, observed, more, options));
        s.truncation_change = std::abs(g_more - s.g2) / s.g2;
    }
    return s;
}

double unfiltered_g2_zero(const SystemModel& system, const Matrix& emit,
                          const FilterOptions& options) {
    const double horizon = options.horizon > 0.0 ? options.horizon : default_horizon(system);
    const TimeGrid grid = correlation_grid(system, horizon, options.grid_density);
    const RegressionResult r =
        two_time_g2_map(system, emit, grid.nodes, options.integrator, options.execution);
    double p = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) p += grid.weights[i] * r.intensity[i];
    if (p < 1e-12) throw Error(ErrorCode::ZeroEmission, "time-integrated intensity below 1e-12");
    return integrate_map(r.g2, grid.weights) / (p * p);
}

SweepResult spectrum(const SystemModel& system, const Observed& observed,
                     const std::vector<double>& detunings, double spec_bandwidth,
                     const SensorConfig& sensor, const FilterOptions& options,
                     std::vector<double>* raw) {
    require(!detunings.empty(), ErrorCode::InvalidArgument, "detuning grid is empty");
    require(spec_bandwidth > 0.0, ErrorCode::InvalidArgument, "spectral bandwidth must be > 0");
    const auto n = static_cast<long>(detunings.size());
    std::vector<double> values(detunings.size(), 0.0);
    std::vector<std::exception_ptr> errors(detunings.size());

    auto point = [&](long k) {
        SensorConfig sc = sensor;
        sc.bandwidth = spec_bandwidth;
        sc.detuning = detunings[static_cast<std::size_t>(k)];
        const SystemModel m = with_sensor(system, observed, sc);
        const double horizon = options.horizon > 0.0 ? options.horizon : default_horizon(m);
        const auto mom = integrate_moments(m, m.output("sensor"), horizon, options.integrator, false);
        values[static_cast<std::size_t>(k)] =
            std::pow(sc.bandwidth / (2.0 * sc.coupling), 2) * mom.intensity_integral;
    };
    if (options.execution == Execution::Serial) {
        for (long k = 0; k < n; ++k) point(k);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (long k = 0; k < n; ++k) {
            try {
                point(k);
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    if (raw) *raw = values;
    const double peak = *std::max_element(values.begin(), values.end());
    if (peak < 1e-12) throw Error(ErrorCode::ZeroEmission, "spectrum is identically zero");

    SweepResult r;
    r.axis_name = "detuning_over_gamma";
    r.axis = detunings;
    for (double v : values) r.values.push_back(v / peak);
    r.epsilon_used.assign(detunings.size(), sensor.coupling);
    r.converged.assign(detunings.size(), true);
    r.parameters["spec_bandwidth"] = spec_bandwidth;
    return r;
}

namespace {

void check_axis(const std::vector<double>& axis, const char* what) {
    require(!axis.empty(), ErrorCode::InvalidArgument, std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < axis.size(); ++i)
        require(axis[i] > axis[i - 1], ErrorCode::InvalidArgument,
                std::string(what) + " grid must be strictly increasing");
}

struct SweepPoint {
    double length;
    double bandwidth;
};

// Runs curves x points; point (c, k) -> jobs[c * per_curve + k].
std::vector<FilteredStats> run_points(const SweepSetup& setup, const std::vector<SweepPoint>& jobs,
                                      Execution execution) {
    std::vector<FilteredStats> out(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    FilterOptions inner = setup.options;
    if (execution == Execution::Parallel) inner.execution = Execution::Serial;

    auto job = [&](std::size_t i) {
        const auto& p = jobs[i];
        try {
            GaussianPulse pulse;
            pulse.length = p.length;
            pulse.area = setup.area_for_length ? setup.area_for_length(p.length) : setup.area;
            SensorConfig sc = setup.sensor;
            sc.bandwidth = p.bandwidth;
            out[i] = filtered_g2_zero(setup.builder(pulse), setup.observed, sc, inner);
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << "sweep point (tau = " << p.length << ", Gamma = " << p.bandwidth
                << "): " << e.detail();
            throw Error(e.code(), msg.str());
        }
    };

    const auto n = static_cast<long>(jobs.size());
    if (execution == Execution::Serial) {
        for (long i = 0; i < n; ++i) job(static_cast<std::size_t>(i));
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < n; ++i) {
            try {
                job(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return out;
}

SweepResult collect(const std::vector<FilteredStats>& stats, std::size_t first,
                    const std::vector<double>& axis, std::string axis_name) {
    SweepResult r;
    r.axis_name = std::move(axis_name);
    r.axis = axis;
    for (std::size_t k = 0; k < axis.size(); ++k) {
        const auto& s = stats[first + k];
        r.values.push_back(s.g2);
        r.epsilon_used.push_back(s.epsilon_used);
        r.converged.push_back(s.converged);
    }
    return r;
}

}  // namespace

std::vector<SweepResult> sweep_pulse_length(const SweepSetup& setup,
                                            const std::vector<double>& lengths,
                                            const std::vector<double>& bandwidths,
                                            Execution execution) {
    check_axis(lengths, "pulse length");
    require(!bandwidths.empty(), ErrorCode::InvalidArgument, "no filter widths given");
    std::vector<SweepPoint> jobs;
    for (double g : bandwidths)
        for (double tau : lengths) jobs.push_back({tau, g});
    const auto stats = run_points(setup, jobs, execution);

    std::vector<SweepResult> curves;
    for (std::size_t c = 0; c < bandwidths.size(); ++c) {
        auto r = collect(stats, c * lengths.size(), lengths, "pulse_length");
        r.parameters["bandwidth"] = bandwidths[c];
        r.parameters["area"] = setup.area;
        curves.push_back(std::move(r));
    }
    return curves;
}

std::vector<SweepResult> sweep_filter_width(const SweepSetup& setup,
                                            const std::vector<double>& bandwidths,
                                            const std::vector<double>& lengths,
                                            Execution execution) {
    check_axis(bandwidths, "filter width");
    require(!lengths.empty(), ErrorCode::InvalidArgument, "no pulse lengths given");
    std::vector<SweepPoint> jobs;
    for (double tau : lengths)
        for (double g : bandwidths) jobs.push_back({tau, g});
    const auto stats = run_points(setup, jobs, execution);

    std::vector<SweepResult> curves;
    for (std::size_t c = 0; c < lengths.size(); ++c) {
        auto r = collect(stats, c * bandwidths.size(), bandwidths, "filter_width");
        r.parameters["pulse_length"] = lengths[c];
        r.parameters["area"] =
            setup.area_for_length ? setup.area_for_length(lengths[c]) : setup.area;
        curves.push_back(std::move(r));
    }
    return curves;
}

std::vector<double> logspace(double a, double b, int n) {
    require(a > 0.0 && b > 0.0, ErrorCode::InvalidArgument, "logspace bounds must be > 0");
    std::vector<double> v = linspace(std::log10(a), std::log10(b), n);
    for (double& x : v) x = std::pow(10.0, x);
    v.front() = a;
    v.back() = b;
    return v;
}

double two_photon_pi_area(const BiexcitonConfig& config, double length,
                          const IntegratorConfig& integrator) {
    require(length > 0.0, ErrorCode::InvalidArgument, "pulse length must be > 0");
    auto population = [&](double area) {
        GaussianPulse pulse;
        pulse.length = length;
        pulse.area = area;
        const SystemModel m = build_biexciton(config, pulse);
        const double t_end = pulse.center() + kPulseSupportHalfWidth * length;
        const auto traj = propagate(m, pure_state(4, 0), {0.0, t_end}, integrator);
        return traj.states.back()(3, 3).real();
    };

    // First maximum that actually inverts; ripples of a weak drive are skipped.
    const double step = 0.05;
    double prev = 0.0;
    double cur = population(step);
    for (double a = 2.0 * step; a < 200.0; a += step) {
        const double next = population(a);
        if (cur > prev && cur >= next && cur > 0.5) {
            // Golden-section refinement on [a - 2 step, a].
            double lo = a - 2.0 * step, hi = a;
            const double r = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
            double f1 = population(x1), f2 = population(x2);
            while (hi - lo > 1e-6) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + r * (hi - lo);
                    f2 = population(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - r * (hi - lo);
                    f1 = population(x1);
                }
            }
            return 0.5 * (lo + hi);
        }
        prev = cur;
        cur = next;
    }
    throw Error(ErrorCode::NonConvergence, "no inverting two-photon pulse area found");
}

}  // namespace qdf
