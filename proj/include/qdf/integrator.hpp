// integrator.hpp: explicit Runge-Kutta steppers for complex state vectors

#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace qdf {

enum class IntegratorMethod { FixedRK4, AdaptiveDP45 };

struct IntegratorConfig {
    IntegratorMethod method{IntegratorMethod::AdaptiveDP45};
    double rel_tol{1e-9};
    double abs_tol{1e-11};
    double max_step{std::numeric_limits<double>::infinity()};
    /// Minimum number of steps across [t0 - 4 tau, t0 + 4 tau] of every pulse.
    int min_steps_per_pulse{50};
    /// Step of the fixed-step RK4 method.
    double fixed_step{1e-3};
    /// Propagate undriven stretches with the exact exponential of the
    /// (time-independent) Liouvillian instead of stepping through them.
    bool exact_free_evolution{true};

    void validate() const;
};

using StateVector = Eigen::VectorXcd;
using OdeRhs = std::function<void(double t, const StateVector& y, StateVector& dydt)>;

/// Advances y(t) across successive intervals. Keeps the adaptive step size and
/// the first-same-as-last stage between calls; call invalidate() whenever the
/// state is modified outside advance().
class OdeStepper {
public:
    OdeStepper(const IntegratorConfig& config, OdeRhs rhs, Eigen::Index size);

    /// Integrates from t to t_end, landing exactly on t_end. Steps never exceed h_cap.
    void advance(double& t, double t_end, StateVector& y, double h_cap);

    void invalidate() { fsal_valid_ = false; }
    long accepted_steps() const { return accepted_; }
    long rejected_steps() const { return rejected_; }

private:
    void advance_rk4(double& t, double t_end, StateVector& y, double h_cap);
    void advance_dp45(double& t, double t_end, StateVector& y, double h_cap);
    double initial_step(double t, const StateVector& y, const StateVector& f) const;

    IntegratorConfig cfg_;
    OdeRhs rhs_;
    StateVector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
    double h_{0.0};
    bool fsal_valid_{false};
    long accepted_{0};
    long rejected_{0};
};

}  // namespace qdf
