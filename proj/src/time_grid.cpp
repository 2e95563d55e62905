#include "qdf/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdf/error.hpp"

namespace qdf {

std::vector<double> trapezoid_weights(const std::vector<double>& nodes) {
    std::vector<double> w(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const double h = nodes[i] - nodes[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    return w;
}

TimeGrid uniform_grid(double horizon, int points) {
    require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be > 0");
    require(points >= 2, ErrorCode::InvalidArgument, "grid needs at least two points");
    TimeGrid g;
    g.nodes.resize(static_cast<std::size_t>(points));
    const double h = horizon / (points - 1);
    for (int i = 0; i < points; ++i) g.nodes[static_cast<std::size_t>(i)] = h * i;
    g.nodes.back() = horizon;
    g.weights = trapezoid_weights(g.nodes);
    return g;
}

TimeGrid graded_grid(double horizon, double base_step, const std::vector<GridFeature>& features,
                     double growth) {
    require(horizon > 0.0 && base_step > 0.0, ErrorCode::InvalidArgument,
            "horizon and base step must be > 0");
    for (const auto& f : features)
        require(f.max_step > 0.0 && f.end >= f.begin, ErrorCode::InvalidArgument,
                "invalid grid feature");

    auto wanted = [&](double t) {
        double h = base_step;
        for (const auto& f : features) {
            const double dist = t < f.begin ? f.begin - t : (t > f.end ? t - f.end : 0.0);
            h = std::min(h, f.max_step + growth * dist);
        }
        return h;
    };
    // Largest step of the form base / 2^k that fits under the request on [t, t + h].
    auto ladder = [&](double t) {
        double h = base_step;
        for (int k = 0; k < 60; ++k) {
            if (h <= wanted(t) && h <= wanted(t + h)) break;
            h *= 0.5;
        }
        // A feature starting inside the step must not be stepped over.
        for (const auto& f : features)
            while (f.begin > t && f.begin < t + h && h > f.max_step) h *= 0.5;
        return h;
    };

    TimeGrid g;
    double t = 0.0;
    g.nodes.push_back(t);
    while (t < horizon) {
        const double h = ladder(t);
        double next = t + h;
        // Avoid a sliver at the end of the horizon.
        if (next > horizon - 0.25 * h) next = horizon;
        g.nodes.push_back(next);
        t = next;
    }
    g.weights = trapezoid_weights(g.nodes);
    return g;
}

TimeGrid correlation_grid(const SystemModel& system, double horizon, double density) {
    require(density > 0.0, ErrorCode::InvalidArgument, "grid density must be > 0");
    std::vector<GridFeature> features;
    double drive_end = 0.0;
    if (auto w = system.drive_window()) {
        drive_end = w->second;
        features.push_back({0.0, w->second, system.shortest_drive_width() / 4.0 / density});
    }
    for (const auto& c : system.channels) {
        if (c.rate <= 0.0) continue;
        // Channels faster than the pulse need no finer steps than the pulse itself.
        double step = 1.0 / (8.0 * c.rate);
        if (std::isfinite(system.shortest_drive_width()))
            step = std::max(step, system.shortest_drive_width() / 4.0);
        features.push_back({0.0, drive_end + 12.0 / c.rate, step / density});
    }
    return graded_grid(horizon, horizon / 300.0 / density, features);
}

}  // namespace qdf
