#include "qdf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "qdf/error.hpp"
#include "qdf/lindblad.hpp"

namespace qdf {

Matrix pure_state(int n, int index) {
    require(index >= 0 && index < n, ErrorCode::InvalidArgument, "state index out of range");
    return ket_bra(n, index, index);
}

namespace {

double min_eigenvalue(const Matrix& rho) {
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

void validate_density_matrix(const Matrix& rho, double tolerance) {
    require(rho.rows() == rho.cols() && rho.rows() > 0, ErrorCode::DimensionMismatch,
            "density matrix must be square and nonempty");
    require((rho - rho.adjoint()).cwiseAbs().maxCoeff() <= tolerance,
            ErrorCode::NonPhysicalState, "density matrix is not Hermitian");
    require(std::abs(rho.trace() - 1.0) <= tolerance, ErrorCode::NonPhysicalState,
            "density matrix trace differs from 1");
    require(min_eigenvalue(rho) >= -tolerance, ErrorCode::NonPhysicalState,
            "density matrix has a negative eigenvalue");
}

double default_horizon(const SystemModel& system) {
    const double rate = system.slowest_rate();
    require(std::isfinite(rate), ErrorCode::InvalidArgument,
            "system without dissipation has no natural horizon");
    double t0 = 0.0;
    if (auto w = system.drive_window()) t0 = 0.5 * (w->first + w->second);
    return t0 + 12.0 / rate;
}

std::vector<double> linspace(double a, double b, int n) {
    require(n >= 2, ErrorCode::InvalidArgument, "linspace needs at least two points");
    std::vector<double> v(static_cast<std::size_t>(n));
    const double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + h * i;
    v.back() = b;
    return v;
}

Trajectory propagate(const SystemModel& system, const Matrix& rho0,
                     const std::vector<double>& times, const IntegratorConfig& config) {
    require(!times.empty(), ErrorCode::InvalidArgument, "time grid is empty");
    for (std::size_t i = 1; i < times.size(); ++i)
        require(times[i] > times[i - 1], ErrorCode::InvalidArgument,
                "time grid must be strictly increasing");
    validate_density_matrix(rho0);

    LindbladEngine engine(system, config);
    Evolution evo(engine);
    Matrix x = engine.to_scaled(rho0);
    double t = times.front();

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    for (double target : times) {
        evo.advance(t, target, x);
        Matrix rho = engine.from_scaled(x);
        if (min_eigenvalue(rho) < -1e-6)
            throw Error(ErrorCode::NonPhysicalState,
                        "negative eigenvalue below -1e-6 at t = " + std::to_string(target));
        traj.states.push_back(std::move(rho));
    }
    return traj;
}

std::vector<cplx> expectation(const Trajectory& trajectory, const Matrix& op) {
    std::vector<cplx> out;
    out.reserve(trajectory.states.size());
    for (const auto& rho : trajectory.states) {
        require(op.rows() == rho.rows() && op.cols() == rho.cols(), ErrorCode::DimensionMismatch,
                "operator does not match trajectory dimension");
        out.push_back((op * rho).trace());
    }
    return out;
}

PhysicalityReport physicality_report(const Trajectory& trajectory) {
    require(!trajectory.states.empty(), ErrorCode::InvalidArgument, "empty trajectory");
    PhysicalityReport r;
    r.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& rho : trajectory.states) {
        r.max_trace_drift = std::max(r.max_trace_drift, std::abs(rho.trace() - 1.0));
        r.max_hermiticity_violation =
            std::max(r.max_hermiticity_violation, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        r.min_eigenvalue = std::min(r.min_eigenvalue, min_eigenvalue(rho));
    }
    return r;
}

}  // namespace qdf
