#include "circspline/fourier_spline.hpp"

#include <algorithm>
#include <cmath>

#include "circspline/errors.hpp"
#include "circspline/simd.hpp"

namespace circspline {

double shrinkage(int k, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("shrinkage: lambda must be >= 0");
    const double kk = static_cast<double>(k) * static_cast<double>(k);
    return 1.0 / (1.0 + lambda * kk * kk);
}

ShrinkageProfile ShrinkageProfile::make(double lambda, int max_order) {
    ShrinkageProfile p;
    p.lambda = lambda;
    p.c.resize(static_cast<std::size_t>(max_order) + 1);
    for (int k = 0; k <= max_order; ++k) p.c[k] = shrinkage(k, lambda);
    return p;
}

int default_order(std::size_t n) { return static_cast<int>(std::min<std::size_t>(n / 2, 512)); }

double SplineDensityEstimate::operator()(double x) const {
    double out = 0.0;
    const double xs[1] = {x};
    simd::detail::cosine_series_scalar(shrunken.nonnegative(), xs, std::span<double>(&out, 1));
    return out;
}

std::vector<double> SplineDensityEstimate::evaluate(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    simd::cosine_series(shrunken.nonnegative(), xs, out);
    return out;
}

namespace {
SplineDensityEstimate shrink(const FourierCoefficients& u, std::size_t n, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("fit_spline_density: lambda must be >= 0");
    std::vector<cplx> c = u.nonnegative();
    for (std::size_t k = 1; k < c.size(); ++k) c[k] *= shrinkage(static_cast<int>(k), lambda);
    SplineDensityEstimate est;
    est.shrunken = FourierCoefficients(std::move(c));
    est.lambda = lambda;
    est.sample_size = n;
    return est;
}
}  // namespace

SplineDensityEstimate fit_spline_density(const AngularSample& sample, double lambda, int max_order) {
    if (sample.empty()) throw DomainError("fit_spline_density: empty sample");
    const int K = max_order < 0 ? default_order(sample.size()) : max_order;
    return shrink(empirical_fourier(sample, K), sample.size(), lambda);
}

SplineDensityEstimate fit_spline_density(const FourierCoefficients& moments, std::size_t n,
                                         double lambda) {
    return shrink(moments, n, lambda);
}

double evaluate_density(const SplineDensityEstimate& est, double x) { return est(x); }

SplineDensityEstimate fit_spline_density_weighted(const AngularSample& sample,
                                                  std::span<const double> weights, double lambda,
                                                  int max_order) {
    if (sample.empty()) throw DomainError("fit_spline_density_weighted: empty sample");
    if (weights.size() != sample.size())
        throw DomainError("fit_spline_density_weighted: weight length mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) throw DomainError("fit_spline_density_weighted: weight outside [0,1]");
        total += w;
    }
    const int K = max_order < 0 ? default_order(sample.size()) : max_order;
    SplineDensityEstimate est = shrink(weighted_fourier(sample, weights, K), sample.size(), lambda);
    est.mass = total / static_cast<double>(sample.size());
    return est;
}

int spline_kernel_terms(double lambda) {
    if (!(lambda > 0.0)) throw DomainError("spline_kernel: lambda must be > 0");
    // C_k < 1e-12 once lambda k^4 > 1e12
    return static_cast<int>(std::ceil(std::pow(1e12 / lambda, 0.25)));
}

double spline_kernel(double x, double lambda) {
    const int kmax = spline_kernel_terms(lambda);
    double acc = 0.0;
    // smallest terms first
    for (int k = kmax; k >= 1; --k) acc += std::cos(k * x) * shrinkage(k, lambda);
    return 1.0 + 2.0 * acc;
}

MiseEstimate empirical_mise(const FourierCoefficients& coeffs, double lambda, std::size_t n,
                            MiseCorrection correction, double weight_m2) {
    if (n < 1) throw DomainError("empirical_mise: n must be >= 1");
    if (!(weight_m2 >= 0.0 && weight_m2 <= 1.0)) throw DomainError("empirical_mise: weight_m2 must be in [0, 1]");
    const double nd = static_cast<double>(n);
    double bias = 0.0, var = 0.0;
    for (int k = 1; k <= coeffs.max_order(); ++k) {
        const double a = std::norm(coeffs(k));
        const double c = shrinkage(k, lambda);
        // E|û_k|^2 = |u_k|^2 + (m2 - |u_k|^2)/n, so b is unbiased; it dips below 0 on noise frequencies
        const double b = correction == MiseCorrection::Plugin ? a : a - (weight_m2 - a) / nd;
        bias += b * (c - 1.0) * (c - 1.0);
        var += c * c * (weight_m2 - a) / nd;
    }
    // each k >= 1 stands for the pair +-k
    MiseEstimate m;
    m.lambda = lambda;
    m.bias_term = 2.0 * kTwoPi * bias;
    m.variance_term = 2.0 * kTwoPi * var;
    m.total = m.bias_term + m.variance_term;
    return m;
}

LambdaGrid LambdaGrid::log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi >= lo && count >= 1)) throw DomainError("LambdaGrid: bad range");
    LambdaGrid g;
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i)
        g.values.push_back(count == 1 ? lo : std::exp(a + (b - a) * i / (count - 1)));
    return g;
}

LambdaSelection select_lambda(const FourierCoefficients& coeffs, std::size_t n,
                              const LambdaGrid& grid, MiseCorrection correction, double weight_m2) {
    if (grid.values.empty()) throw DomainError("select_lambda: empty grid");
    LambdaSelection sel;
    bool first = true;
    for (double lam : grid.values) {
        if (!(lam > 0.0)) throw DomainError("select_lambda: grid entries must be > 0");
        const MiseEstimate m = empirical_mise(coeffs, lam, n, correction, weight_m2);
        sel.curve.push_back(m);
        if (first || m.total < sel.best.total || (m.total == sel.best.total && lam > sel.lambda)) {
            sel.best = m;
            sel.lambda = lam;
            first = false;
        }
    }
    return sel;
}

namespace diagnostics {
double pointwise_mse(const FourierCoefficients& truth, double lambda, double n, double x,
                     int max_order) {
    const int K = max_order;
    if (K < 0 || truth.max_order() < 2 * K)
        throw DomainError("pointwise_mse: truth needs coefficients up to order 2K");
    std::vector<double> c(static_cast<std::size_t>(2 * K + 1));
    for (int k = -K; k <= K; ++k) c[k + K] = shrinkage(k, lambda);
    cplx bias{}, var{};
    for (int k = -K; k <= K; ++k) {
        const cplx uk = truth(k);
        const double ck = c[k + K];
        for (int kp = -K; kp <= K; ++kp) {
            const cplx ukp = truth(kp);
            const double ckp = c[kp + K];
            const cplx phase = std::polar(1.0, -static_cast<double>(k - kp) * x);
            bias += uk * std::conj(ukp) * (ck - 1.0) * (ckp - 1.0) * phase;
            var += ck * ckp * (truth(k - kp) - uk * std::conj(ukp)) * phase;
        }
    }
    return (bias + var / n).real();
}
}  // namespace diagnostics

}  // namespace circspline
