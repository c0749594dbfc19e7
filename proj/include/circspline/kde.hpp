#pragma once

#include <span>
#include <vector>

#include "circspline/circle_core.hpp"

namespace circspline {

enum class KernelKind { Uniform, Epanechnikov, Quartic, Cos2, WrappedNormal };

/// Kernel on the real line with unit integral, applied as K(d/h)/h to circular distances.
/// Cos2 uses K(z) = cos^2(pi z/2) on |z| <= 1, which is (2m/pi) cos^2(m d) for h = pi/(2m).
struct KernelSpec {
    KernelKind kind = KernelKind::Epanechnikov;
    double bandwidth = 0.5;

    static KernelSpec epanechnikov(double h) { return {KernelKind::Epanechnikov, h}; }
    static KernelSpec quartic(double h) { return {KernelKind::Quartic, h}; }
    static KernelSpec uniform(double h) { return {KernelKind::Uniform, h}; }
    static KernelSpec wrapped_normal(double h) { return {KernelKind::WrappedNormal, h}; }
    static KernelSpec cos2(int m);

    KernelSpec with_bandwidth(double h) const { return {kind, h}; }
};

/// Unscaled kernel K(z).
double kernel_profile(KernelKind kind, double z);
/// K_h at circular distance d in [0, pi].
double scaled_kernel(const KernelSpec& spec, double d);

struct KernelMoments {
    double k2 = 0.0;  // int z^2 K
    double j2 = 0.0;  // int K^2
};
KernelMoments kernel_moments(KernelKind kind);

double kde_estimate(const AngularSample& sample, const KernelSpec& spec, double x);
std::vector<double> kde_grid(const AngularSample& sample, const KernelSpec& spec,
                             std::span<const double> xs);

double cos2_estimate(const AngularSample& sample, int m, double x);
/// E[exp(i k xi)] for xi with density (2m/pi) cos^2(m x) on |x| <= pi/(2m).
double cos2_fourier_factor(int m, int k);

struct BandwidthChoice {
    double h = 0.0;
    double beta = 0.0;     // plug-in only: estimated int f''^2
    bool flagged = false;  // plug-in: degenerate pilot; CV: minimum at a grid endpoint
    std::vector<double> grid;
    std::vector<double> scores;  // CV curve
};

/// h = ((1/n) j2 / (k2^2 beta))^(1/5).
double plugin_bandwidth_formula(double n, double j2, double k2, double beta);
/// int f''^2 for the Lebesgue-scaled pilot spline with lambda = n^(-4/5).
double pilot_roughness(const AngularSample& sample);
BandwidthChoice bandwidth_plugin(const AngularSample& sample, KernelKind kind);

std::vector<double> default_bandwidth_grid(int count = 40, double lo = 0.01, double hi = kPi / 2);
/// LSCV(h) = int fhat^2 - (2/n) sum_i fhat_{-i}(X_i).
double lscv_score(const AngularSample& sample, const KernelSpec& spec);
BandwidthChoice bandwidth_cv(const AngularSample& sample, KernelKind kind,
                             const std::vector<double>& grid);

/// Cos2 order matching a bandwidth (support half-width pi/(2m) ~ h), at least 1.
int cos2_order_for_bandwidth(double h);

}  // namespace circspline
