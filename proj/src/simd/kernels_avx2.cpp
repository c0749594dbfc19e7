// Compiled with -mavx2 -mfma; only called after a runtime CPU check.
#include "circspline/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace circspline::simd::detail {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kResync = 32;

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline void exact_powers(const double* t, double k, __m256d& re, __m256d& im) {
    alignas(32) double r[4], i[4];
    for (int l = 0; l < 4; ++l) {
        r[l] = std::cos(k * t[l]);
        i[l] = std::sin(k * t[l]);
    }
    re = _mm256_load_pd(r);
    im = _mm256_load_pd(i);
}
}  // namespace

void power_sums_avx2(std::span<const double> theta, std::span<const double> weights,
                     std::span<std::complex<double>> out) {
    const std::size_t kcount = out.size();
    const std::size_t n = theta.size();
    const std::size_t nvec = n / 4 * 4;
    std::vector<__m256d> acc_re(kcount, _mm256_setzero_pd()), acc_im(kcount, _mm256_setzero_pd());
    alignas(32) double cbuf[4], sbuf[4];
    for (std::size_t j = 0; j < nvec; j += 4) {
        for (int l = 0; l < 4; ++l) {
            cbuf[l] = std::cos(theta[j + l]);
            sbuf[l] = std::sin(theta[j + l]);
        }
        const __m256d c = _mm256_load_pd(cbuf), s = _mm256_load_pd(sbuf);
        const __m256d w = weights.empty() ? _mm256_set1_pd(1.0) : _mm256_loadu_pd(&weights[j]);
        __m256d zr = w, zi = _mm256_setzero_pd();
        for (std::size_t k = 0; k < kcount; ++k) {
            if (k % kResync == 0 && k > 0) {
                exact_powers(&theta[j], static_cast<double>(k), zr, zi);
                zr = _mm256_mul_pd(zr, w);
                zi = _mm256_mul_pd(zi, w);
            }
            acc_re[k] = _mm256_add_pd(acc_re[k], zr);
            acc_im[k] = _mm256_add_pd(acc_im[k], zi);
            const __m256d nr = _mm256_fmsub_pd(zr, c, _mm256_mul_pd(zi, s));
            zi = _mm256_fmadd_pd(zr, s, _mm256_mul_pd(zi, c));
            zr = nr;
        }
    }
    for (std::size_t k = 0; k < kcount; ++k) out[k] = {hsum(acc_re[k]), hsum(acc_im[k])};
    if (nvec < n) {
        std::vector<std::complex<double>> tail(kcount);
        power_sums_scalar(theta.subspan(nvec), weights.empty() ? weights : weights.subspan(nvec),
                          tail);
        for (std::size_t k = 0; k < kcount; ++k) out[k] += tail[k];
    }
}

void cosine_series_avx2(std::span<const std::complex<double>> coeffs, std::span<const double> x,
                        std::span<double> out) {
    const std::size_t kcount = coeffs.size();
    const std::size_t m = x.size();
    const std::size_t nvec = m / 4 * 4;
    const double c0 = kcount > 0 ? coeffs[0].real() : 0.0;
    alignas(32) double cbuf[4], sbuf[4];
    for (std::size_t i = 0; i < nvec; i += 4) {
        for (int l = 0; l < 4; ++l) {
            cbuf[l] = std::cos(x[i + l]);
            sbuf[l] = std::sin(x[i + l]);
        }
        const __m256d c = _mm256_load_pd(cbuf), s = _mm256_load_pd(sbuf);
        __m256d ck = c, sk = s, acc = _mm256_setzero_pd();
        for (std::size_t k = 1; k < kcount; ++k) {
            if (k % kResync == 0) exact_powers(&x[i], static_cast<double>(k), ck, sk);
            acc = _mm256_fmadd_pd(_mm256_set1_pd(coeffs[k].real()), ck, acc);
            acc = _mm256_fmadd_pd(_mm256_set1_pd(coeffs[k].imag()), sk, acc);
            const __m256d nc = _mm256_fmsub_pd(ck, c, _mm256_mul_pd(sk, s));
            sk = _mm256_fmadd_pd(sk, c, _mm256_mul_pd(ck, s));
            ck = nc;
        }
        const __m256d r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), acc, _mm256_set1_pd(c0));
        _mm256_storeu_pd(&out[i], r);
    }
    if (nvec < m) cosine_series_scalar(coeffs, x.subspan(nvec), out.subspan(nvec));
}

void kernel_sum_avx2(PolyKernel kind, std::span<const double> theta, double h,
                     std::span<const double> x, std::span<double> out) {
    const std::size_t n = theta.size();
    const std::size_t nvec = n / 4 * 4;
    const double inv_h = 1.0 / h;
    const double scale = 1.0 / (static_cast<double>(n) * h);
    const __m256d vinv = _mm256_set1_pd(inv_h);
    const __m256d vtwopi = _mm256_set1_pd(kTwoPi);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const double coef = kind == PolyKernel::Uniform ? 0.5
                        : kind == PolyKernel::Epanechnikov ? 0.75
                                                           : 0.9375;
    const __m256d vcoef = _mm256_set1_pd(coef);
    std::vector<double> tail_out(1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const __m256d xv = _mm256_set1_pd(x[i]);
        __m256d acc = zero;
        for (std::size_t j = 0; j < nvec; j += 4) {
            __m256d d = _mm256_and_pd(_mm256_sub_pd(xv, _mm256_loadu_pd(&theta[j])), absmask);
            d = _mm256_min_pd(d, _mm256_sub_pd(vtwopi, d));
            const __m256d u = _mm256_mul_pd(d, vinv);
            const __m256d t = _mm256_fnmadd_pd(u, u, one);  // 1 - u^2
            __m256d val;
            if (kind == PolyKernel::Uniform) {
                val = _mm256_and_pd(_mm256_cmp_pd(u, one, _CMP_LE_OQ), vcoef);
            } else if (kind == PolyKernel::Epanechnikov) {
                val = _mm256_mul_pd(vcoef, _mm256_max_pd(t, zero));
            } else {
                const __m256d tp = _mm256_max_pd(t, zero);
                val = _mm256_mul_pd(vcoef, _mm256_mul_pd(tp, tp));
            }
            acc = _mm256_add_pd(acc, val);
        }
        double total = hsum(acc);
        if (nvec < n) {
            // Tail contributes with the same normalization as the vector part.
            kernel_sum_scalar(kind, theta.subspan(nvec), h, x.subspan(i, 1), tail_out);
            total += tail_out[0] * static_cast<double>(n - nvec) * h;
        }
        out[i] = total * scale;
    }
}

}  // namespace circspline::simd::detail

#endif
