// pulse.hpp: Gaussian drive envelope

#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "qdf/error.hpp"

namespace qdf {

/// Gaussian drive pulse. Times are in units of 1/gamma_sigma.
/// `area` is the Bloch rotation angle: the envelope integrates to it.
struct GaussianPulse {
    double area{std::numbers::pi};
    double length{0.05};
    std::optional<double> offset;  // defaults to 4 * length

    double center() const { return offset.value_or(4.0 * length); }
    double peak() const { return area / (std::sqrt(2.0 * std::numbers::pi) * length); }

    void validate() const {
        require(length > 0.0, ErrorCode::InvalidArgument, "pulse length must be > 0");
        require(area >= 0.0, ErrorCode::InvalidArgument, "pulse area must be >= 0");
    }
};

/// Omega(t) = area / (sqrt(2 pi) length) * exp(-(t - t0)^2 / (2 length^2)).
inline double pulse_amplitude(const GaussianPulse& pulse, double t) {
    const double x = (t - pulse.center()) / pulse.length;
    return pulse.peak() * std::exp(-0.5 * x * x);
}

/// Half-width (in units of `length`) beyond which the envelope is treated as zero.
/// exp(-50) relative to the peak.
inline constexpr double kPulseSupportHalfWidth = 10.0;

}  // namespace qdf
