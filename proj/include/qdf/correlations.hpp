// correlations.hpp: filtered photon statistics, spectra and parameter sweeps

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qdf/integrator.hpp"
#include "qdf/model.hpp"
#include "qdf/regression.hpp"

namespace qdf {

/// Which operator feeds the sensor: a named output of the model or an
/// observation-vector combination of the ladder transitions.
using Observed = std::variant<std::string, ObservationVector>;

struct FilterOptions {
    IntegratorConfig integrator;
    double horizon{0.0};  // 0 selects default_horizon() of the sensor-extended model
    double grid_density{1.0};
    bool check_convergence{true};  // repeat at epsilon / 2
    bool check_truncation{false};  // repeat with one more sensor level
    Execution execution{Execution::Parallel};
};

struct FilteredStats {
    std::vector<double> times;
    std::vector<double> n_of_t;  // (Gamma / 2 epsilon)^2 <s^dagger s>(t)
    double n_integral{0.0};
    double g2_numerator{0.0};  // (Gamma / 2 epsilon)^4 * double integral of G2
    double g2{0.0};
    double epsilon_used{0.0};
    double horizon{0.0};
    bool converged{false};
    std::optional<double> epsilon_change;     // relative change of g2 under epsilon / 2
    std::optional<double> truncation_change;  // relative change with truncation + 1
};

/// Time-integrated g2[0; Gamma] of the light seen by a sensor attached to `observed`.
/// Throws ZeroEmission when n_integral < 1e-12 and NotConverged when the
/// epsilon-halving check moves g2 by more than 0.5%.
FilteredStats filtered_g2_zero(const SystemModel& system, const Observed& observed,
                               const SensorConfig& sensor, const FilterOptions& options = {});

/// Bare-emitter g2[0] = double integral of G2 / (integral of <emit^dagger emit>)^2.
double unfiltered_g2_zero(const SystemModel& system, const Matrix& emit,
                          const FilterOptions& options = {});

struct SweepResult {
    std::string axis_name;
    std::vector<double> axis;
    std::vector<double> values;
    std::vector<double> epsilon_used;
    std::vector<bool> converged;
    std::map<std::string, double> parameters;  // fixed values of the sweep
};

/// Peak-normalized time-integrated sensor intensity versus sensor detuning.
/// `raw` receives the unnormalized n_integral values when given.
SweepResult spectrum(const SystemModel& system, const Observed& observed,
                     const std::vector<double>& detunings, double spec_bandwidth,
                     const SensorConfig& sensor = {}, const FilterOptions& options = {},
                     std::vector<double>* raw = nullptr);

using ModelBuilder = std::function<SystemModel(const GaussianPulse&)>;

struct SweepSetup {
    ModelBuilder builder;
    Observed observed;
    SensorConfig sensor;  // bandwidth is overridden by the sweep
    double area{3.141592653589793};
    /// Optional per-length pulse area, overriding `area` (used for the
    /// two-photon resonant ladder whose effective pi area depends on tau).
    std::function<double(double)> area_for_length;
    FilterOptions options;
};

/// One g2-versus-tau curve per filter width.
std::vector<SweepResult> sweep_pulse_length(const SweepSetup& setup,
                                            const std::vector<double>& lengths,
                                            const std::vector<double>& bandwidths,
                                            Execution execution = Execution::Parallel);

/// One g2-versus-Gamma curve per pulse length.
std::vector<SweepResult> sweep_filter_width(const SweepSetup& setup,
                                            const std::vector<double>& bandwidths,
                                            const std::vector<double>& lengths,
                                            Execution execution = Execution::Parallel);

/// n points spaced logarithmically on [a, b].
std::vector<double> logspace(double a, double b, int n);

/// Pulse area that maximizes the biexciton population right after a pulse of
/// length tau on the two-photon resonance.
double two_photon_pi_area(const BiexcitonConfig& config, double length,
                          const IntegratorConfig& integrator = {});

}  // namespace qdf
