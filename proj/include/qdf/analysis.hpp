// analysis.hpp: cascade lifetimes, instrument response and filter profiles
//
// Time units are whatever the data use (ps in the CLI); rates are their inverse.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qdf {

enum class Branch { Biexciton, Exciton };

struct CascadeParams {
    double gamma_2x{1.0 / 158.0};
    double gamma_x{1.0 / 294.0};
    double irf_sigma{40.0};
    double amplitude{1.0};
    double offset{0.0};  // time at which the biexciton is prepared

    void validate() const;
};

/// (n_2X, n_X) for a biexciton prepared at t = 0. Equal rates use the
/// limiting form n_X = gamma t exp(-gamma t).
std::pair<double, double> cascade_populations(double gamma_2x, double gamma_x, double t);

/// exp(-rate t) Theta(t) convolved with a unit-area Gaussian of width sigma.
double exp_gaussian(double rate, double sigma, double t);

/// amplitude * (Gaussian IRF * population)(t - offset) for the chosen branch.
double cascade_model(const CascadeParams& p, Branch branch, double t);

/// Discrete convolution with a normalized, bin-integrated Gaussian kernel on a
/// uniform grid of step dt. Identity when sigma <= dt / 2; GridTooCoarse when
/// dt / 2 < sigma < 5 dt.
std::vector<double> convolve_irf(const std::vector<double>& curve, double dt, double sigma);

struct FitOptions {
    int max_iterations{200};
    double tolerance{1e-10};  // relative chi2 change that stops the iteration
    /// Refits with weights 1 / max(model, 1) taken from the previous solution;
    /// 0 keeps the data weights 1 / max(counts, 1).
    int reweight_passes{1};
};

struct FitResult {
    CascadeParams params;
    CascadeParams uncertainties;  // 1 sigma; fields absent from the branch stay 0
    std::vector<std::string> names;
    Eigen::MatrixXd covariance;
    double chi2{0.0};
    double chi2_reduced{0.0};
    int iterations{0};
};

/// Poisson-weighted Levenberg-Marquardt fit of cascade_model to counts.
/// Uncertainties come from the unscaled covariance (J^T W J)^-1.
/// Exciton: {gamma_2x, gamma_x, irf_sigma, amplitude, offset};
/// Biexciton: {gamma_2x, irf_sigma, amplitude, offset}. The exciton model is
/// symmetric in the two rates up to amplitude, so `init` fixes the labeling.
FitResult fit_lifetimes(const std::vector<double>& t, const std::vector<double>& counts,
                        const CascadeParams& init, Branch branch, const FitOptions& options = {});

struct SuperGaussianFilter {
    double center{0.0};
    double bandwidth{1.0};  // FWHM
    double order{1.0};

    void validate() const;
};

/// exp(-ln 2 (2 |nu - center| / bandwidth)^(2 order)).
double super_gaussian(double nu, const SuperGaussianFilter& filter);

}  // namespace qdf
