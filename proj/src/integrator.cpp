#include "qdf/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qdf/error.hpp"

namespace qdf {

void IntegratorConfig::validate() const {
    require(rel_tol > 0.0 && abs_tol > 0.0, ErrorCode::InvalidArgument,
            "integrator tolerances must be > 0");
    require(max_step > 0.0, ErrorCode::InvalidArgument, "max_step must be > 0");
    require(min_steps_per_pulse >= 20, ErrorCode::InvalidArgument,
            "min_steps_per_pulse must be >= 20");
    require(fixed_step > 0.0, ErrorCode::InvalidArgument, "fixed_step must be > 0");
}

OdeStepper::OdeStepper(const IntegratorConfig& config, OdeRhs rhs, Eigen::Index size)
    : cfg_(config), rhs_(std::move(rhs)) {
    cfg_.validate();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_}) v->resize(size);
}

void OdeStepper::advance(double& t, double t_end, StateVector& y, double h_cap) {
    if (!(t_end > t)) return;
    h_cap = std::min(h_cap, cfg_.max_step);
    if (cfg_.method == IntegratorMethod::FixedRK4)
        advance_rk4(t, t_end, y, h_cap);
    else
        advance_dp45(t, t_end, y, h_cap);
}

void OdeStepper::advance_rk4(double& t, double t_end, StateVector& y, double h_cap) {
    const double span = t_end - t;
    const double h_target = std::min(cfg_.fixed_step, h_cap);
    const long n = std::max(1L, static_cast<long>(std::ceil(span / h_target - 1e-9)));
    const double h = span / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
        const double ti = t + static_cast<double>(i) * h;
        rhs_(ti, y, k1_);
        tmp_ = y + (0.5 * h) * k1_;
        rhs_(ti + 0.5 * h, tmp_, k2_);
        tmp_ = y + (0.5 * h) * k2_;
        rhs_(ti + 0.5 * h, tmp_, k3_);
        tmp_ = y + h * k3_;
        rhs_(ti + h, tmp_, k4_);
        y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        ++accepted_;
    }
    t = t_end;
    fsal_valid_ = false;
}

double OdeStepper::initial_step(double t, const StateVector& y, const StateVector& f) const {
    (void)t;
    double d0 = 0.0, d1 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(y[i]);
        d0 += std::norm(y[i]) / (sc * sc);
        d1 += std::norm(f[i]) / (sc * sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(y.size()));
    d1 = std::sqrt(d1 / static_cast<double>(y.size()));
    if (d0 < 1e-5 || d1 < 1e-5) return 1e-6;
    return 0.01 * d0 / d1;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

void OdeStepper::advance_dp45(double& t, double t_end, StateVector& y, double h_cap) {
    if (!fsal_valid_) {
        rhs_(t, y, k1_);
        fsal_valid_ = true;
    }
    if (h_ <= 0.0) h_ = initial_step(t, y, k1_);

    while (t < t_end) {
        double h = std::min(h_, h_cap);
        bool last = false;
        if (t + h >= t_end || t_end - (t + h) < 1e-12 * std::max(1.0, std::abs(t_end))) {
            h = t_end - t;
            last = true;
        }
        if (h < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw Error(ErrorCode::StepSizeUnderflow,
                        "step size underflow at t = " + std::to_string(t));

        tmp_ = y + h * (a21 * k1_);
        rhs_(t + c2 * h, tmp_, k2_);
        tmp_ = y + h * (a31 * k1_ + a32 * k2_);
        rhs_(t + c3 * h, tmp_, k3_);
        tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        rhs_(t + c4 * h, tmp_, k4_);
        tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs_(t + c5 * h, tmp_, k5_);
        tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs_(t + h, tmp_, k6_);
        ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        rhs_(t + h, ynew_, k7_);
        tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

        double err = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc =
                cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
            err += std::norm(tmp_[i]) / (sc * sc);
        }
        err = std::sqrt(err / static_cast<double>(y.size()));

        if (err <= 1.0) {
            t = last ? t_end : t + h;
            y.swap(ynew_);
            k1_.swap(k7_);
            ++accepted_;
            const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            const double grown = h * std::clamp(fac, 0.2, 5.0);
            // A landing step may be artificially short; keep the previous estimate then.
            h_ = last ? std::max(h_, grown) : grown;
        } else {
            ++rejected_;
            const double fac = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
            h_ = h * std::clamp(fac, 0.1, 0.9);
        }
    }
}

}  // namespace qdf
