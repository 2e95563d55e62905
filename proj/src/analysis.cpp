#include "qdf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qdf/error.hpp"

namespace qdf {

void CascadeParams::validate() const {
    require(gamma_2x > 0.0 && gamma_x > 0.0, ErrorCode::InvalidArgument, "rates must be > 0");
    require(irf_sigma > 0.0, ErrorCode::InvalidArgument, "irf_sigma must be > 0");
}

std::pair<double, double> cascade_populations(double gamma_2x, double gamma_x, double t) {
    require(gamma_2x > 0.0 && gamma_x > 0.0, ErrorCode::InvalidArgument, "rates must be > 0");
    require(t >= 0.0, ErrorCode::InvalidArgument, "t must be >= 0");
    const double n2x = std::exp(-gamma_2x * t);
    const double diff = gamma_x - gamma_2x;
    if (std::abs(diff) < 1e-9 * gamma_x) return {n2x, gamma_2x * t * std::exp(-gamma_x * t)};
    // e^{-a t} - e^{-b t} = e^{-a t} (1 - e^{-(b - a) t})
    return {n2x, gamma_2x / diff * n2x * -std::expm1(-diff * t)};
}

namespace {

// exp(z^2) erfc(z)
double erfcx(double z) {
    if (z < 3.0) return std::exp(z * z) * std::erfc(z);
    double f = z;
    for (int n = 60; n >= 1; --n) f = z + 0.5 * n / f;
    return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

double gaussian_pdf(double sigma, double t) {
    return std::exp(-0.5 * t * t / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// t exp(-rate t) Theta(t) convolved with the Gaussian.
double t_exp_gaussian(double rate, double sigma, double t) {
    return (t - rate * sigma * sigma) * exp_gaussian(rate, sigma, t) +
           sigma * sigma * gaussian_pdf(sigma, t);
}

}  // namespace

double exp_gaussian(double rate, double sigma, double t) {
    const double z = (rate * sigma * sigma - t) / (sigma * std::sqrt(2.0));
    const double a = -rate * t + 0.5 * rate * rate * sigma * sigma;
    if (z < 0.0) return 0.5 * std::exp(a) * std::erfc(z);
    // Large positive z: combine the exponentials before evaluating.
    return 0.5 * std::exp(a - z * z) * erfcx(z);
}

double cascade_model(const CascadeParams& p, Branch branch, double t) {
    const double s = t - p.offset;
    if (branch == Branch::Biexciton) return p.amplitude * exp_gaussian(p.gamma_2x, p.irf_sigma, s);
    const double diff = p.gamma_x - p.gamma_2x;
    if (std::abs(diff) < 1e-6 * p.gamma_x)
        return p.amplitude * p.gamma_2x * t_exp_gaussian(p.gamma_x, p.irf_sigma, s);
    return p.amplitude * p.gamma_2x / diff *
           (exp_gaussian(p.gamma_2x, p.irf_sigma, s) - exp_gaussian(p.gamma_x, p.irf_sigma, s));
}

std::vector<double> convolve_irf(const std::vector<double>& curve, double dt, double sigma) {
    require(dt > 0.0, ErrorCode::InvalidArgument, "grid step must be > 0");
    require(sigma >= 0.0, ErrorCode::InvalidArgument, "irf_sigma must be >= 0");
    if (sigma <= 0.5 * dt) return curve;
    require(sigma >= 5.0 * dt, ErrorCode::GridTooCoarse,
            "grid step must be at most irf_sigma / 5");

    const int half = static_cast<int>(std::ceil(8.0 * sigma / dt));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    const double scale = 1.0 / (sigma * std::sqrt(2.0));
    double norm = 0.0;
    for (int j = -half; j <= half; ++j) {
        const double w = 0.5 * (std::erf((j + 0.5) * dt * scale) - std::erf((j - 0.5) * dt * scale));
        kernel[static_cast<std::size_t>(j + half)] = w;
        norm += w;
    }
    for (double& w : kernel) w /= norm;

    const auto n = static_cast<long>(curve.size());
    std::vector<double> out(curve.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        const long lo = std::max(0L, i - half);
        const long hi = std::min(n - 1, i + half);
        for (long k = lo; k <= hi; ++k)
            acc += kernel[static_cast<std::size_t>(i - k + half)] * curve[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

namespace {

struct Packing {
    Branch branch;

    std::vector<std::string> names() const {
        if (branch == Branch::Exciton) return {"gamma_2x", "gamma_x", "irf_sigma", "amplitude", "offset"};
        return {"gamma_2x", "irf_sigma", "amplitude", "offset"};
    }
    Eigen::VectorXd pack(const CascadeParams& p) const {
        if (branch == Branch::Exciton) {
            Eigen::VectorXd v(5);
            v << p.gamma_2x, p.gamma_x, p.irf_sigma, p.amplitude, p.offset;
            return v;
        }
        Eigen::VectorXd v(4);
        v << p.gamma_2x, p.irf_sigma, p.amplitude, p.offset;
        return v;
    }
    CascadeParams unpack(const Eigen::VectorXd& v, CascadeParams base) const {
        if (branch == Branch::Exciton) {
            base.gamma_2x = v(0);
            base.gamma_x = v(1);
            base.irf_sigma = v(2);
            base.amplitude = v(3);
            base.offset = v(4);
        } else {
            base.gamma_2x = v(0);
            base.irf_sigma = v(1);
            base.amplitude = v(2);
            base.offset = v(3);
        }
        return base;
    }
    bool admissible(const Eigen::VectorXd& v) const {
        if (branch == Branch::Exciton) return v(0) > 0.0 && v(1) > 0.0 && v(2) > 0.0;
        return v(0) > 0.0 && v(1) > 0.0;
    }
};

}  // namespace

FitResult fit_lifetimes(const std::vector<double>& t, const std::vector<double>& counts,
                        const CascadeParams& init, Branch branch, const FitOptions& options) {
    require(t.size() == counts.size(), ErrorCode::DimensionMismatch,
            "time and count series differ in length");
    require(t.size() >= 50, ErrorCode::InvalidArgument, "fit needs at least 50 data points");
    init.validate();

    const Packing pk{branch};
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::VectorXd sqrt_w(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = counts[static_cast<std::size_t>(i)];
        sqrt_w(i) = 1.0 / std::sqrt(std::max(y(i), 1.0));
    }

    auto residuals = [&](const Eigen::VectorXd& v) {
        const CascadeParams p = pk.unpack(v, init);
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i)
            r(i) = (y(i) - cascade_model(p, branch, t[static_cast<std::size_t>(i)])) * sqrt_w(i);
        return r;
    };
    // Jacobian of the model (not the residual), weighted.
    auto jacobian = [&](const Eigen::VectorXd& v) {
        Eigen::MatrixXd j(n, v.size());
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            const double h = 1e-6 * std::max(std::abs(v(k)), 1e-12);
            Eigen::VectorXd up = v, down = v;
            up(k) += h;
            down(k) -= h;
            j.col(k) = (residuals(down) - residuals(up)) / (2.0 * h);
        }
        return j;
    };

    // Levenberg-Marquardt on the current weights; returns the iteration count.
    auto minimize = [&](Eigen::VectorXd& v) {
        Eigen::VectorXd r = residuals(v);
        double chi2 = r.squaredNorm();
        double lambda = 1e-3;
        for (int it = 1; it <= options.max_iterations; ++it) {
            const Eigen::MatrixXd j = jacobian(v);
            const Eigen::MatrixXd jtj = j.transpose() * j;
            const Eigen::VectorXd g = j.transpose() * r;
            bool improved = false, done = false;
            while (lambda < 1e16) {
                Eigen::MatrixXd a = jtj;
                a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
                const Eigen::VectorXd step = a.ldlt().solve(g);
                const Eigen::VectorXd trial = v + step;
                if (step.allFinite() && pk.admissible(trial)) {
                    const Eigen::VectorXd rt = residuals(trial);
                    const double c = rt.squaredNorm();
                    if (std::isfinite(c) && c <= chi2) {
                        const double rel = (chi2 - c) / std::max(chi2, 1e-300);
                        const double move = (step.cwiseAbs().array() /
                                             (v.cwiseAbs().array() + 1e-12)).maxCoeff();
                        v = trial;
                        r = rt;
                        chi2 = c;
                        lambda = std::max(lambda / 10.0, 1e-12);
                        improved = true;
                        done = rel < options.tolerance || move < 1e-10;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            // No downhill step left means the minimum is reached to machine precision.
            if (done || !improved) return it;
        }
        throw Error(ErrorCode::NonConvergence, "Levenberg-Marquardt did not converge in " +
                                                   std::to_string(options.max_iterations) +
                                                   " iterations");
    };

    FitResult out;
    Eigen::VectorXd v = pk.pack(init);
    out.iterations = minimize(v);
    for (int pass = 0; pass < options.reweight_passes; ++pass) {
        const CascadeParams p = pk.unpack(v, init);
        for (Eigen::Index i = 0; i < n; ++i)
            sqrt_w(i) = 1.0 / std::sqrt(std::max(cascade_model(p, branch, t[static_cast<std::size_t>(i)]), 1.0));
        out.iterations += minimize(v);
    }
    const double chi2 = residuals(v).squaredNorm();

    const Eigen::MatrixXd j = jacobian(v);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    // Column-scaled rank test; a flat direction makes the covariance meaningless.
    const Eigen::VectorXd d = jtj.diagonal().cwiseSqrt();
    require((d.array() > 0.0).all(), ErrorCode::IllConditioned,
            "Jacobian has a zero column; a parameter does not affect the model");
    const Eigen::MatrixXd scaled = d.cwiseInverse().asDiagonal() * jtj * d.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
    const double cond = es.eigenvalues().maxCoeff() / std::max(es.eigenvalues().minCoeff(), 0.0);
    require(std::isfinite(cond) && cond < 1e14, ErrorCode::IllConditioned,
            "Jacobian is rank-deficient at the solution");

    out.covariance = jtj.inverse();
    out.params = pk.unpack(v, init);
    Eigen::VectorXd sd = out.covariance.diagonal().cwiseSqrt();
    CascadeParams zero{0.0, 0.0, 0.0, 0.0, 0.0};
    out.uncertainties = pk.unpack(sd, zero);
    out.names = pk.names();
    out.chi2 = chi2;
    out.chi2_reduced = chi2 / static_cast<double>(n - v.size());
    return out;
}

void SuperGaussianFilter::validate() const {
    require(bandwidth > 0.0, ErrorCode::InvalidArgument, "filter bandwidth must be > 0");
    require(order >= 1.0, ErrorCode::InvalidArgument, "super-Gaussian order must be >= 1");
}

double super_gaussian(double nu, const SuperGaussianFilter& filter) {
    filter.validate();
    const double x = 2.0 * std::abs(nu - filter.center) / filter.bandwidth;
    return std::exp(-std::numbers::ln2 * std::pow(x, 2.0 * filter.order));
}

}  // namespace qdf
