// model.hpp: quantum emitter models consumed by the dynamics engine
//
// Conventions: all rates and frequencies are in units of gamma_sigma, times in
// units of 1/gamma_sigma. Hamiltonians are written in the frame rotating at the
// laser frequency. The drive enters as (Omega(t)/2)(sigma^dagger + sigma) so a
// pulse of area pi inverts a resonant two-level system.

#pragma once

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qdf/pulse.hpp"

namespace qdf {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

struct TwoLevelConfig {
    double decay_rate{1.0};
    double detuning{0.0};  // omega_X - omega_L

    void validate() const;
};

struct BiexcitonConfig {
    double decay_rate{1.0};       // shared by all four transitions
    double binding_energy{300.0};
    double exciton_detuning{150.0};  // omega_X - omega_L

    void validate() const;

    /// Configuration with the laser on the cgs <-> 2X two-photon resonance.
    static BiexcitonConfig two_photon_resonant(double binding_energy, double decay_rate = 1.0);
};

/// Exciton detuning that puts 2 omega_L on the biexciton energy 2 omega_X - E_b.
inline double two_photon_resonant_detuning(double binding_energy) { return 0.5 * binding_energy; }

struct PolarizationState {
    double theta{0.0};
    double phi{0.0};

    static PolarizationState horizontal() { return {0.0, 0.0}; }
    static PolarizationState vertical();

    Eigen::Vector2cd vector() const;
};

struct PolarizationFactors {
    cplx h;
    cplx v;
};

/// Projections of the conjugated input polarization onto H = (1,0) and V = (0,1).
PolarizationFactors project_polarization(const PolarizationState& input);

/// Weights of the ladder transitions (sigma21, sigma42, sigma31, sigma43).
struct ObservationVector {
    std::array<cplx, 4> eta{};

    void validate() const;

    static ObservationVector exciton_v() { return {{cplx{0}, cplx{0}, cplx{1}, cplx{0}}}; }
};

struct SensorConfig {
    double detuning{0.0};   // omega_1 - omega_L
    double bandwidth{1.0};  // Lorentzian FWHM Gamma
    double coupling{1e-3};  // epsilon
    int truncation{2};      // highest sensor Fock state kept

    void validate() const;
};

/// Real envelope multiplying a Hermitian operator in H(t).
struct DriveTerm {
    std::function<double(double)> envelope;
    Matrix op;
    double support_begin{0.0};  // envelope is negligible outside [begin, end]
    double support_end{0.0};
    double width{1.0};          // characteristic time scale of the envelope
};

struct Channel {
    std::string label;
    Matrix jump;
    double rate{0.0};
};

struct SensorAttachment {
    SensorConfig config;
    std::string observed;
    int system_dimension{0};
};

/// Time-dependent Hamiltonian plus Lindblad channels on a finite Hilbert space.
/// Immutable once built; safe to share between threads.
struct SystemModel {
    int dimension{0};
    Matrix static_hamiltonian;
    std::vector<DriveTerm> drives;
    std::vector<Channel> channels;
    std::vector<std::string> labels;
    std::map<std::string, Matrix, std::less<>> outputs;
    /// Typical magnitude of each basis state's amplitude. Used by the engine to
    /// condition the numerics; any positive values give the same dynamics.
    std::vector<double> state_scale;
    std::optional<SensorAttachment> sensor;

    Matrix hamiltonian(double t) const;
    const Matrix& output(std::string_view name) const;
    bool has_output(std::string_view name) const { return outputs.find(name) != outputs.end(); }
    /// Slowest nonzero channel rate.
    double slowest_rate() const;
    double fastest_rate() const;
    /// Union hull of all drive supports, or nullopt when undriven.
    std::optional<std::pair<double, double>> drive_window() const;
    /// Shortest drive width, or +inf when undriven.
    double shortest_drive_width() const;
};

/// Basis projector |i><j| of dimension n.
Matrix ket_bra(int n, int i, int j);

SystemModel build_two_level(const TwoLevelConfig& config, const GaussianPulse& pulse);

SystemModel build_biexciton(const BiexcitonConfig& config, const GaussianPulse& pulse,
                            const PolarizationState& polarization = PolarizationState::horizontal());

/// X_eta = eta1 sigma21 + eta2 sigma42 + eta3 sigma31 + eta4 sigma43.
Matrix observation_operator(const SystemModel& ladder, const ObservationVector& eta);

/// Tensor the system with a truncated bosonic sensor mode coupled to `observed`.
SystemModel attach_sensor(const SystemModel& system, std::string_view observed,
                          const SensorConfig& sensor);
SystemModel attach_sensor(const SystemModel& system, const ObservationVector& eta,
                          const SensorConfig& sensor);

}  // namespace qdf
