#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "circspline/circle_core.hpp"

namespace circspline {

/// C_k(lambda) = 1/(1 + lambda k^4).
double shrinkage(int k, double lambda);

struct ShrinkageProfile {
    double lambda = 0.0;
    std::vector<double> c;  // c[k], k = 0..K

    static ShrinkageProfile make(double lambda, int max_order);
    int max_order() const { return static_cast<int>(c.size()) - 1; }
};

/// Default truncation order floor(n/2), capped at 512.
int default_order(std::size_t n);

/// Density in the circle's uniform-measure units: f(x) = 1 + 2 sum (x_k cos kx + y_k sin kx).
/// Divide by 2pi for a density with respect to arc length.
struct SplineDensityEstimate {
    FourierCoefficients shrunken;
    double lambda = 0.0;
    std::size_t sample_size = 0;
    /// Mean point weight for weighted fits; 1 for plain fits. Not folded into shrunken(0).
    double mass = 1.0;

    double operator()(double x) const;
    std::vector<double> evaluate(std::span<const double> xs) const;
};

SplineDensityEstimate fit_spline_density(const AngularSample& sample, double lambda,
                                         int max_order = -1);
SplineDensityEstimate fit_spline_density(const FourierCoefficients& moments, std::size_t n,
                                         double lambda);
double evaluate_density(const SplineDensityEstimate& est, double x);

/// Weighted fit: u_k = (1/n) sum_j w_j Z_j^k for k >= 1, u_0 = 1, mass = mean weight.
SplineDensityEstimate fit_spline_density_weighted(const AngularSample& sample,
                                                  std::span<const double> weights, double lambda,
                                                  int max_order = -1);

/// K(x) = 1 + 2 sum cos(kx)/(1 + lambda k^4), summed until C_k < 1e-12.
double spline_kernel(double x, double lambda);
int spline_kernel_terms(double lambda);

struct MiseEstimate {
    double lambda = 0.0;
    double bias_term = 0.0;
    double variance_term = 0.0;
    double total = 0.0;
};

enum class MiseCorrection {
    Plugin,         // |u_k|^2 replaced by |u_hat_k|^2 as written
    BiasCorrected,  // |u_k|^2 replaced by |u_hat_k|^2 - (m2 - |u_hat_k|^2)/n
};

/// weight_m2 is the mean squared point weight for coefficients from weighted_fourier (1 when
/// unweighted); it sets the noise level m2/n of |u_hat_k|^2.
MiseEstimate empirical_mise(const FourierCoefficients& coeffs, double lambda, std::size_t n,
                            MiseCorrection correction = MiseCorrection::Plugin, double weight_m2 = 1.0);

struct LambdaGrid {
    std::vector<double> values;
    static LambdaGrid log_spaced(double lo = 1e-6, double hi = 1e2, int count = 60);
};

struct LambdaSelection {
    double lambda = 0.0;
    MiseEstimate best;
    std::vector<MiseEstimate> curve;
};

/// Grid point minimizing the estimated MISE; ties go to the larger lambda.
LambdaSelection select_lambda(const FourierCoefficients& coeffs, std::size_t n,
                              const LambdaGrid& grid,
                              MiseCorrection correction = MiseCorrection::BiasCorrected,
                              double weight_m2 = 1.0);

namespace diagnostics {
/// Pointwise MSE of the order-K estimate at x given the true coefficients up to order 2K.
double pointwise_mse(const FourierCoefficients& truth, double lambda, double n, double x,
                     int max_order);
}  // namespace diagnostics

}  // namespace circspline
