#include <cstdlib>
#include <cstring>

#include "circspline/simd.hpp"

namespace circspline::simd {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Isa active_isa() {
    static const Isa isa = [] {
        const char* env = std::getenv("CIRCSPLINE_SIMD");
        if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
        return avx2_available() ? Isa::Avx2 : Isa::Scalar;
    }();
    return isa;
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void power_sums(std::span<const double> theta, std::span<const double> weights,
                std::span<std::complex<double>> out) {
#if defined(__x86_64__) || defined(_M_X64)
    if (active_isa() == Isa::Avx2) return detail::power_sums_avx2(theta, weights, out);
#endif
    detail::power_sums_scalar(theta, weights, out);
}

void cosine_series(std::span<const std::complex<double>> coeffs, std::span<const double> x,
                   std::span<double> out) {
#if defined(__x86_64__) || defined(_M_X64)
    if (active_isa() == Isa::Avx2) return detail::cosine_series_avx2(coeffs, x, out);
#endif
    detail::cosine_series_scalar(coeffs, x, out);
}

void kernel_sum(PolyKernel kind, std::span<const double> theta, double h,
                std::span<const double> x, std::span<double> out) {
#if defined(__x86_64__) || defined(_M_X64)
    if (active_isa() == Isa::Avx2) return detail::kernel_sum_avx2(kind, theta, h, x, out);
#endif
    detail::kernel_sum_scalar(kind, theta, h, x, out);
}

}  // namespace circspline::simd
