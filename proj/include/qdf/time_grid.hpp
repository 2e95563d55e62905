// time_grid.hpp: nonuniform quadrature grids for time integrals

#pragma once

#include <vector>

#include "qdf/model.hpp"

namespace qdf {

/// Nodes on [0, horizon] with trapezoid weights.
struct TimeGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Interval that needs steps no larger than max_step.
struct GridFeature {
    double begin{0.0};
    double end{0.0};
    double max_step{0.0};
};

TimeGrid uniform_grid(double horizon, int points);

/// Steps are powers-of-two fractions of base_step, refined inside features and
/// relaxed with distance from them at a rate of `growth` per unit time, so that
/// only a handful of distinct step lengths occur.
TimeGrid graded_grid(double horizon, double base_step, const std::vector<GridFeature>& features,
                     double growth = 0.2);

/// Grid resolving the pulse (tau / 4 across it) and every decay channel
/// (max(1 / (8 r), tau / 4) until 12 / r after the drive), with base step
/// horizon / 300.
/// `density` divides every step.
TimeGrid correlation_grid(const SystemModel& system, double horizon, double density = 1.0);

/// Trapezoid weights for arbitrary increasing nodes.
std::vector<double> trapezoid_weights(const std::vector<double>& nodes);

}  // namespace qdf
