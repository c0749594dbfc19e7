#include "circspline/simd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace circspline::simd::detail {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// The rotation recurrence drifts by ~k ulp; restart it from cos/sin every this many steps.
constexpr int kResync = 32;

double poly_kernel(PolyKernel kind, double u) {
    if (u > 1.0) return 0.0;
    switch (kind) {
        case PolyKernel::Uniform: return 0.5;
        case PolyKernel::Epanechnikov: return 0.75 * (1.0 - u * u);
        case PolyKernel::Quartic: {
            const double t = 1.0 - u * u;
            return 0.9375 * t * t;
        }
    }
    return 0.0;
}
}  // namespace

void power_sums_scalar(std::span<const double> theta, std::span<const double> weights,
                       std::span<std::complex<double>> out) {
    std::fill(out.begin(), out.end(), std::complex<double>{});
    const std::size_t kcount = out.size();
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double w = weights.empty() ? 1.0 : weights[j];
        const double c = std::cos(theta[j]), s = std::sin(theta[j]);
        double zr = 1.0, zi = 0.0;
        for (std::size_t k = 0; k < kcount; ++k) {
            if (k % kResync == 0 && k > 0) {
                zr = std::cos(static_cast<double>(k) * theta[j]);
                zi = std::sin(static_cast<double>(k) * theta[j]);
            }
            out[k] += std::complex<double>(w * zr, w * zi);
            const double nr = zr * c - zi * s;
            zi = zr * s + zi * c;
            zr = nr;
        }
    }
}

void cosine_series_scalar(std::span<const std::complex<double>> coeffs,
                          std::span<const double> x, std::span<double> out) {
    const std::size_t kcount = coeffs.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = std::cos(x[i]), s = std::sin(x[i]);
        double ck = c, sk = s, acc = 0.0;
        for (std::size_t k = 1; k < kcount; ++k) {
            if (k % kResync == 0) {
                ck = std::cos(static_cast<double>(k) * x[i]);
                sk = std::sin(static_cast<double>(k) * x[i]);
            }
            acc += coeffs[k].real() * ck + coeffs[k].imag() * sk;
            const double nc = ck * c - sk * s;
            sk = sk * c + ck * s;
            ck = nc;
        }
        out[i] = (kcount > 0 ? coeffs[0].real() : 0.0) + 2.0 * acc;
    }
}

void kernel_sum_scalar(PolyKernel kind, std::span<const double> theta, double h,
                       std::span<const double> x, std::span<double> out) {
    const double inv_h = 1.0 / h;
    const double scale = 1.0 / (static_cast<double>(theta.size()) * h);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double acc = 0.0;
        for (double t : theta) {
            double d = std::abs(x[i] - t);
            d = std::min(d, kTwoPi - d);
            acc += poly_kernel(kind, d * inv_h);
        }
        out[i] = acc * scale;
    }
}

}  // namespace circspline::simd::detail
