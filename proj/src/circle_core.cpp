#include "circspline/circle_core.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "circspline/errors.hpp"
#include "circspline/simd.hpp"

namespace circspline {

double wrap_angle(double raw) {
    if (!std::isfinite(raw)) throw DomainError("wrap_angle: non-finite angle");
    double r = std::fmod(raw, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod of a value just below a multiple of 2pi can round up to 2pi after the shift
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double signed_displacement(double a, double b) {
    double d = std::fmod(b - a, kTwoPi);
    if (d < -kPi) d += kTwoPi;
    if (d >= kPi) d -= kTwoPi;
    return d;
}

double circular_distance(double a, double b) {
    const double d = std::abs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, kTwoPi - d);
}

AngularSample::AngularSample(std::span<const double> raw) {
    angles_.reserve(raw.size());
    for (double r : raw) angles_.push_back(wrap_angle(r));
}

AngularSample::AngularSample(std::vector<double> raw) : angles_(std::move(raw)) {
    for (double& r : angles_) r = wrap_angle(r);
}

std::vector<double> AngularSample::sorted() const {
    std::vector<double> s = angles_;
    std::sort(s.begin(), s.end());
    return s;
}

FourierCoefficients::FourierCoefficients(int max_order) {
    if (max_order < 0) throw DomainError("FourierCoefficients: negative order");
    coeffs_.assign(static_cast<std::size_t>(max_order) + 1, cplx{});
    coeffs_[0] = 1.0;
}

FourierCoefficients::FourierCoefficients(std::vector<cplx> nonnegative)
    : coeffs_(std::move(nonnegative)) {
    if (coeffs_.empty()) throw DomainError("FourierCoefficients: need at least u_0");
}

cplx FourierCoefficients::operator()(int k) const {
    const int a = std::abs(k);
    if (a > max_order()) throw DomainError("FourierCoefficients: order out of range");
    const cplx v = coeffs_[static_cast<std::size_t>(a)];
    return k < 0 ? std::conj(v) : v;
}

void FourierCoefficients::set(int k, cplx value) {
    const int a = std::abs(k);
    if (a > max_order()) throw DomainError("FourierCoefficients: order out of range");
    coeffs_[static_cast<std::size_t>(a)] = k < 0 ? std::conj(value) : value;
}

FourierCoefficients empirical_fourier(const AngularSample& sample, int max_order) {
    if (sample.empty()) throw DomainError("empirical_fourier: empty sample");
    if (max_order < 0) throw DomainError("empirical_fourier: negative order");
    std::vector<cplx> sums(static_cast<std::size_t>(max_order) + 1);
    simd::power_sums(sample.angles(), {}, sums);
    const double inv_n = 1.0 / static_cast<double>(sample.size());
    for (auto& s : sums) s *= inv_n;
    sums[0] = 1.0;
    return FourierCoefficients(std::move(sums));
}

FourierCoefficients weighted_fourier(const AngularSample& sample, std::span<const double> weights,
                                     int max_order) {
    if (sample.empty()) throw DomainError("weighted_fourier: empty sample");
    if (weights.size() != sample.size()) throw DomainError("weighted_fourier: weight length mismatch");
    std::vector<cplx> sums(static_cast<std::size_t>(max_order) + 1);
    simd::power_sums(sample.angles(), weights, sums);
    const double inv_n = 1.0 / static_cast<double>(sample.size());
    for (auto& s : sums) s *= inv_n;
    sums[0] = 1.0;
    return FourierCoefficients(std::move(sums));
}

AngularSample data_from_moments(const FourierCoefficients& moments, int n) {
    if (n < 1 || n > 8) throw DomainError("data_from_moments: n must be in 1..8");
    if (moments.max_order() < n) throw DomainError("data_from_moments: need moments of order 1..n");
    // Newton's identities: k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i
    std::vector<cplx> p(static_cast<std::size_t>(n) + 1), e(static_cast<std::size_t>(n) + 1);
    for (int k = 1; k <= n; ++k) p[k] = static_cast<double>(n) * moments(k);
    e[0] = 1.0;
    for (int k = 1; k <= n; ++k) {
        cplx acc{};
        for (int i = 1; i <= k; ++i) acc += (i % 2 == 1 ? 1.0 : -1.0) * e[k - i] * p[i];
        e[k] = acc / static_cast<double>(k);
    }
    // z^n + a_{n-1} z^{n-1} + ... + a_0 with a_{n-k} = (-1)^k e_k
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int k = 1; k <= n; ++k) {
        const cplx a = (k % 2 == 0 ? 1.0 : -1.0) * e[k];
        companion(n - k, n - 1) = -a;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    if (solver.info() != Eigen::Success) throw InconsistentMoments("companion eigensolver failed");
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) {
        const cplx z = solver.eigenvalues()(i);
        if (std::abs(std::abs(z) - 1.0) > 1e-4)
            throw InconsistentMoments("root off the unit circle: |z| = " + std::to_string(std::abs(z)));
        angles.push_back(wrap_angle(std::arg(z)));
    }
    std::sort(angles.begin(), angles.end());
    return AngularSample(std::move(angles));
}

}  // namespace circspline
