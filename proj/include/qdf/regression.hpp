// regression.hpp: two-time correlations via the quantum regression theorem

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qdf/integrator.hpp"
#include "qdf/model.hpp"
#include "qdf/time_grid.hpp"

namespace qdf {

enum class Execution { Serial, Parallel };

/// G2(t1, t2) on a square grid; values(i, j) belongs to (times[i], times[j]).
struct CorrelationGrid {
    std::vector<double> times;
    Eigen::MatrixXd values;

    double at(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

/// Two-time map plus the one-time intensity <emit^dagger emit>(t) on the same nodes.
struct RegressionResult {
    CorrelationGrid g2;
    std::vector<double> intensity;
};

/// G2(t1, t2) = tr[emit^dagger emit Lambda(t2 <- t1){emit rho(t1) emit^dagger}] for
/// t2 >= t1, mirrored below the diagonal. The system starts in its ground state
/// (basis state 0) at t = 0 = times.front().
RegressionResult two_time_g2_map(const SystemModel& system, const Matrix& emit,
                                 const std::vector<double>& times,
                                 const IntegratorConfig& config = {},
                                 Execution execution = Execution::Parallel);

/// Trapezoid double integral over the grid using per-node weights.
double integrate_map(const CorrelationGrid& grid, const std::vector<double>& weights);

/// Time integrals of the intensity and of G2 over [0, horizon]^2 computed by
/// augmenting the master equation with the regression state, without any 2D
/// grid. Used as an independent route to the same numbers.
struct IntegratedMoments {
    double intensity_integral{0.0};
    double pair_integral{0.0};
};

IntegratedMoments integrate_moments(const SystemModel& system, const Matrix& emit, double horizon,
                                    const IntegratorConfig& config = {},
                                    bool with_pairs = true);

/// CSV with header "time_unit=1/gamma_sigma" followed by "t1,t2,value" rows (row-major).
void write_correlation_csv(std::ostream& out, const CorrelationGrid& grid);

}  // namespace qdf
