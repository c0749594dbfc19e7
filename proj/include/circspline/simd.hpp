#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and an AVX2/FMA
// variant; the dispatching entry points pick one at runtime.

#include <complex>
#include <span>

namespace circspline::simd {

enum class Isa { Scalar, Avx2 };

/// Best instruction set available on this CPU, unless CIRCSPLINE_SIMD=scalar.
Isa active_isa();
const char* isa_name(Isa isa);
bool avx2_available();

/// out[k] = sum_j w_j exp(i k theta_j) for k = 0..out.size()-1. Empty weights means all 1.
void power_sums(std::span<const double> theta, std::span<const double> weights,
                std::span<std::complex<double>> out);

/// out[i] = Re c_0 + 2 sum_{k>=1} Re(c_k exp(-i k x_i)).
void cosine_series(std::span<const std::complex<double>> coeffs, std::span<const double> x,
                   std::span<double> out);

enum class PolyKernel { Uniform, Epanechnikov, Quartic };

/// out[i] = (1/n) sum_j K((d(x_i, theta_j))/h)/h with d the circular distance.
void kernel_sum(PolyKernel kind, std::span<const double> theta, double h,
                std::span<const double> x, std::span<double> out);

namespace detail {
void power_sums_scalar(std::span<const double>, std::span<const double>,
                       std::span<std::complex<double>>);
void cosine_series_scalar(std::span<const std::complex<double>>, std::span<const double>,
                          std::span<double>);
void kernel_sum_scalar(PolyKernel, std::span<const double>, double, std::span<const double>,
                       std::span<double>);
#if defined(__x86_64__) || defined(_M_X64)
void power_sums_avx2(std::span<const double>, std::span<const double>,
                     std::span<std::complex<double>>);
void cosine_series_avx2(std::span<const std::complex<double>>, std::span<const double>,
                        std::span<double>);
void kernel_sum_avx2(PolyKernel, std::span<const double>, double, std::span<const double>,
                     std::span<double>);
#endif
}  // namespace detail

}  // namespace circspline::simd
