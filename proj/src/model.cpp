#include "qdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/KroneckerProduct>

#include "qdf/error.hpp"

namespace qdf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorCode::NonPhysicalState: return "NonPhysicalState";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::ZeroEmission: return "ZeroEmission";
        case ErrorCode::UnsortedInput: return "UnsortedInput";
        case ErrorCode::WindowOverlap: return "WindowOverlap";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

void TwoLevelConfig::validate() const {
    require(decay_rate > 0.0, ErrorCode::InvalidArgument, "decay_rate must be > 0");
    require(std::isfinite(detuning), ErrorCode::InvalidArgument, "detuning must be finite");
}

void BiexcitonConfig::validate() const {
    require(decay_rate > 0.0, ErrorCode::InvalidArgument, "decay_rate must be > 0");
    require(std::isfinite(binding_energy) && std::isfinite(exciton_detuning),
            ErrorCode::InvalidArgument, "binding_energy and exciton_detuning must be finite");
}

BiexcitonConfig BiexcitonConfig::two_photon_resonant(double binding_energy, double decay_rate) {
    return {decay_rate, binding_energy, two_photon_resonant_detuning(binding_energy)};
}

PolarizationState PolarizationState::vertical() { return {0.5 * std::numbers::pi, 0.0}; }

Eigen::Vector2cd PolarizationState::vector() const {
    return {cplx{std::cos(theta), 0.0}, std::sin(theta) * std::polar(1.0, phi)};
}

PolarizationFactors project_polarization(const PolarizationState& input) {
    const Eigen::Vector2cd u = input.vector().conjugate();
    return {u(0), u(1)};
}

void ObservationVector::validate() const {
    require(std::any_of(eta.begin(), eta.end(), [](cplx c) { return std::abs(c) > 0.0; }),
            ErrorCode::InvalidArgument, "observation vector must have a nonzero component");
}

void SensorConfig::validate() const {
    require(bandwidth > 0.0, ErrorCode::InvalidArgument, "sensor bandwidth must be > 0");
    require(coupling > 0.0, ErrorCode::InvalidArgument, "sensor coupling must be > 0");
    require(truncation >= 2, ErrorCode::InvalidArgument,
            "sensor truncation must be >= 2 to support two-photon correlations");
    require(std::isfinite(detuning), ErrorCode::InvalidArgument, "sensor detuning must be finite");
}

Matrix SystemModel::hamiltonian(double t) const {
    Matrix h = static_hamiltonian;
    for (const auto& d : drives) h += d.envelope(t) * d.op;
    return h;
}

const Matrix& SystemModel::output(std::string_view name) const {
    auto it = outputs.find(name);
    require(it != outputs.end(), ErrorCode::InvalidArgument,
            "unknown output operator '" + std::string(name) + "'");
    return it->second;
}

double SystemModel::slowest_rate() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& c : channels)
        if (c.rate > 0.0) r = std::min(r, c.rate);
    return r;
}

double SystemModel::fastest_rate() const {
    double r = 0.0;
    for (const auto& c : channels) r = std::max(r, c.rate);
    return r;
}

std::optional<std::pair<double, double>> SystemModel::drive_window() const {
    if (drives.empty()) return std::nullopt;
    double a = std::numeric_limits<double>::infinity();
    double b = -a;
    for (const auto& d : drives) {
        a = std::min(a, d.support_begin);
        b = std::max(b, d.support_end);
    }
    return std::make_pair(a, b);
}

double SystemModel::shortest_drive_width() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& d : drives) w = std::min(w, d.width);
    return w;
}

Matrix ket_bra(int n, int i, int j) {
    Matrix m = Matrix::Zero(n, n);
    m(i, j) = 1.0;
    return m;
}

namespace {

DriveTerm gaussian_drive(const GaussianPulse& pulse, Matrix op) {
    const double t0 = pulse.center();
    const double half = kPulseSupportHalfWidth * pulse.length;
    DriveTerm d;
    d.envelope = [pulse](double t) { return 0.5 * pulse_amplitude(pulse, t); };
    d.op = std::move(op);
    d.support_begin = t0 - half;
    d.support_end = t0 + half;
    d.width = pulse.length;
    return d;
}

}  // namespace

SystemModel build_two_level(const TwoLevelConfig& config, const GaussianPulse& pulse) {
    config.validate();
    pulse.validate();

    SystemModel m;
    m.dimension = 2;
    const Matrix sigma = ket_bra(2, 0, 1);
    m.static_hamiltonian = config.detuning * (sigma.adjoint() * sigma);
    if (pulse.area > 0.0) m.drives.push_back(gaussian_drive(pulse, sigma + sigma.adjoint()));
    m.channels.push_back({"sigma", sigma, config.decay_rate});
    m.labels = {"g", "e"};
    m.outputs.emplace("sigma", sigma);
    m.state_scale.assign(2, 1.0);
    return m;
}

SystemModel build_biexciton(const BiexcitonConfig& config, const GaussianPulse& pulse,
                            const PolarizationState& polarization) {
    config.validate();
    pulse.validate();

    // Basis ordering (cgs, X_H, X_V, 2X).
    constexpr int n = 4;
    const Matrix s21 = ket_bra(n, 0, 1);  // X_H -> cgs
    const Matrix s42 = ket_bra(n, 1, 3);  // 2X -> X_H
    const Matrix s31 = ket_bra(n, 0, 2);  // X_V -> cgs
    const Matrix s43 = ket_bra(n, 2, 3);  // 2X -> X_V

    SystemModel m;
    m.dimension = n;
    const double dx = config.exciton_detuning;
    m.static_hamiltonian = Matrix::Zero(n, n);
    m.static_hamiltonian(1, 1) = dx;
    m.static_hamiltonian(2, 2) = dx;
    m.static_hamiltonian(3, 3) = 2.0 * dx - config.binding_energy;

    const auto [h, v] = project_polarization(polarization);
    if (pulse.area > 0.0) {
        const Matrix raise_h = (s21 + s42).adjoint();
        const Matrix raise_v = (s31 + s43).adjoint();
        if (std::abs(h) > 0.0) {
            Matrix op = h * raise_h;
            m.drives.push_back(gaussian_drive(pulse, op + op.adjoint()));
        }
        if (std::abs(v) > 0.0) {
            Matrix op = v * raise_v;
            m.drives.push_back(gaussian_drive(pulse, op + op.adjoint()));
        }
    }

    const double g = config.decay_rate;
    m.channels = {{"sigma21", s21, g}, {"sigma42", s42, g}, {"sigma31", s31, g}, {"sigma43", s43, g}};
    m.labels = {"cgs", "X_H", "X_V", "2X"};
    m.outputs.emplace("sigma21", s21);
    m.outputs.emplace("sigma42", s42);
    m.outputs.emplace("sigma31", s31);
    m.outputs.emplace("sigma43", s43);
    m.outputs.emplace("X", s21 + s42);
    m.outputs.emplace("Y", s31 + s43);
    m.state_scale.assign(n, 1.0);
    return m;
}

Matrix observation_operator(const SystemModel& ladder, const ObservationVector& eta) {
    eta.validate();
    static constexpr std::array<const char*, 4> names{"sigma21", "sigma42", "sigma31", "sigma43"};
    Matrix x = Matrix::Zero(ladder.dimension, ladder.dimension);
    for (std::size_t k = 0; k < names.size(); ++k) x += eta.eta[k] * ladder.output(names[k]);
    return x;
}

namespace {

SystemModel attach(const SystemModel& system, const Matrix& observed, std::string observed_name,
                   const SensorConfig& sensor) {
    sensor.validate();
    require(observed.rows() == system.dimension && observed.cols() == system.dimension,
            ErrorCode::DimensionMismatch, "observed operator does not match system dimension");

    const int ns = sensor.truncation + 1;
    const int ds = system.dimension;
    const Matrix is = Matrix::Identity(ns, ns);
    const Matrix id = Matrix::Identity(ds, ds);
    Matrix a = Matrix::Zero(ns, ns);
    for (int k = 1; k < ns; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));

    auto lift = [&](const Matrix& op) -> Matrix { return Eigen::kroneckerProduct(op, is); };
    const Matrix sensor_a = Eigen::kroneckerProduct(id, a);
    const Matrix lifted_obs = lift(observed);

    SystemModel m;
    m.dimension = ds * ns;
    m.static_hamiltonian = lift(system.static_hamiltonian) +
                           sensor.detuning * (sensor_a.adjoint() * sensor_a) +
                           sensor.coupling * (sensor_a.adjoint() * lifted_obs +
                                              lifted_obs.adjoint() * sensor_a);
    for (const auto& d : system.drives) {
        DriveTerm lifted = d;
        lifted.op = lift(d.op);
        m.drives.push_back(std::move(lifted));
    }
    for (const auto& c : system.channels) m.channels.push_back({c.label, lift(c.jump), c.rate});
    m.channels.push_back({"sensor", sensor_a, sensor.bandwidth});

    m.labels.reserve(static_cast<std::size_t>(m.dimension));
    for (const auto& l : system.labels)
        for (int k = 0; k < ns; ++k) m.labels.push_back(l + "," + std::to_string(k));
    for (const auto& [name, op] : system.outputs) m.outputs.emplace(name, lift(op));
    m.outputs.emplace(observed_name, lifted_obs);
    m.outputs.emplace("sensor", sensor_a);

    // A weakly coupled sensor holds ~kappa^n amplitude in Fock state n.
    const double kappa = 2.0 * sensor.coupling / (sensor.bandwidth + system.fastest_rate());
    m.state_scale.resize(static_cast<std::size_t>(m.dimension));
    for (int i = 0; i < ds; ++i)
        for (int k = 0; k < ns; ++k)
            m.state_scale[static_cast<std::size_t>(i * ns + k)] =
                system.state_scale[static_cast<std::size_t>(i)] * std::pow(kappa, k);

    m.sensor = SensorAttachment{sensor, std::move(observed_name), ds};
    return m;
}

}  // namespace

SystemModel attach_sensor(const SystemModel& system, std::string_view observed,
                          const SensorConfig& sensor) {
    require(!system.sensor, ErrorCode::InvalidArgument, "system already carries a sensor");
    return attach(system, system.output(observed), std::string(observed), sensor);
}

SystemModel attach_sensor(const SystemModel& system, const ObservationVector& eta,
                          const SensorConfig& sensor) {
    require(!system.sensor, ErrorCode::InvalidArgument, "system already carries a sensor");
    return attach(system, observation_operator(system, eta), "X_eta", sensor);
}

}  // namespace qdf
