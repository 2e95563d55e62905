// dynamics.hpp: density-matrix propagation and diagnostics

#pragma once

#include <vector>

#include "qdf/integrator.hpp"
#include "qdf/model.hpp"

namespace qdf {

struct Trajectory {
    std::vector<double> times;
    std::vector<Matrix> states;
};

struct PhysicalityReport {
    double max_trace_drift{0.0};
    double max_hermiticity_violation{0.0};
    double min_eigenvalue{0.0};
};

/// |i><i| on an n-dimensional space.
Matrix pure_state(int n, int index);

/// Throws NonPhysicalState unless rho is Hermitian, unit-trace and positive
/// within `tolerance`.
void validate_density_matrix(const Matrix& rho, double tolerance = 1e-8);

/// Pulse center (midpoint of the drive window) plus 12 / slowest rate.
double default_horizon(const SystemModel& system);

/// n equally spaced points on [a, b] inclusive.
std::vector<double> linspace(double a, double b, int n);

/// Solves the master equation from rho0 at times.front(); states are
/// reported at every entry of `times` (strictly increasing).
Trajectory propagate(const SystemModel& system, const Matrix& rho0,
                     const std::vector<double>& times, const IntegratorConfig& config = {});

/// tr(op rho(t)) for every state of the trajectory.
std::vector<cplx> expectation(const Trajectory& trajectory, const Matrix& op);

PhysicalityReport physicality_report(const Trajectory& trajectory);

}  // namespace qdf
