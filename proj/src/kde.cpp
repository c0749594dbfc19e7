#include "circspline/kde.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <optional>

#include "circspline/errors.hpp"
#include "circspline/fourier_spline.hpp"
#include "circspline/simd.hpp"

namespace circspline {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;

bool compact(KernelKind kind) { return kind != KernelKind::WrappedNormal; }

void check_spec(const KernelSpec& spec) {
    if (!(spec.bandwidth > 0.0)) throw DomainError("kernel bandwidth must be > 0");
    if (compact(spec.kind) && spec.bandwidth > kPi)
        throw DomainError("compact kernel bandwidth must be <= pi");
}

double gk(auto f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

// (K*K)(u) for the unscaled kernel, u >= 0.
double self_convolution(KernelKind kind, double u) {
    u = std::abs(u);
    switch (kind) {
        case KernelKind::Uniform: return u >= 2.0 ? 0.0 : (2.0 - u) / 4.0;
        case KernelKind::Epanechnikov: {
            if (u >= 2.0) return 0.0;
            const double a = 2.0 - u;
            return 3.0 / 160.0 * a * a * a * (u * u + 6.0 * u + 4.0);
        }
        case KernelKind::WrappedNormal: return std::exp(-u * u / 4.0) * kInvSqrt2Pi / std::sqrt(2.0);
        default: break;
    }
    if (u >= 2.0) return 0.0;
    return gk([&](double z) { return kernel_profile(kind, z) * kernel_profile(kind, u - z); },
              u - 1.0, 1.0);
}

// Circular (K_h * K_h)(d) for d in [0, pi].
double circular_self_convolution(const KernelSpec& spec, double d) {
    const double h = spec.bandwidth;
    const int reach = spec.kind == KernelKind::WrappedNormal
                          ? static_cast<int>(std::ceil(12.0 * h / kTwoPi)) + 1
                          : 1;
    double acc = 0.0;
    for (int j = -reach; j <= reach; ++j) acc += self_convolution(spec.kind, (d + kTwoPi * j) / h) / h;
    return acc;
}
}  // namespace

KernelSpec KernelSpec::cos2(int m) {
    if (m < 1) throw DomainError("cos2 kernel: m must be >= 1");
    return {KernelKind::Cos2, kPi / (2.0 * m)};
}

double kernel_profile(KernelKind kind, double z) {
    z = std::abs(z);
    if (kind == KernelKind::WrappedNormal) return kInvSqrt2Pi * std::exp(-0.5 * z * z);
    if (z > 1.0) return 0.0;
    switch (kind) {
        case KernelKind::Uniform: return 0.5;
        case KernelKind::Epanechnikov: return 0.75 * (1.0 - z * z);
        case KernelKind::Quartic: {
            const double t = 1.0 - z * z;
            return 0.9375 * t * t;
        }
        case KernelKind::Cos2: {
            const double c = std::cos(0.5 * kPi * z);
            return c * c;
        }
        default: return 0.0;
    }
}

double scaled_kernel(const KernelSpec& spec, double d) {
    const double h = spec.bandwidth;
    if (spec.kind != KernelKind::WrappedNormal) return kernel_profile(spec.kind, d / h) / h;
    const int reach = static_cast<int>(std::ceil(12.0 * h / kTwoPi)) + 1;
    double acc = 0.0;
    for (int j = -reach; j <= reach; ++j) acc += kernel_profile(spec.kind, (d + kTwoPi * j) / h);
    return acc / h;
}

namespace {
KernelMoments compute_moments(KernelKind kind) {
    const double lim = compact(kind) ? 1.0 : 12.0;
    KernelMoments m;
    m.k2 = gk([&](double z) { return z * z * kernel_profile(kind, z); }, -lim, lim);
    m.j2 = gk([&](double z) { return kernel_profile(kind, z) * kernel_profile(kind, z); }, -lim, lim);
    return m;
}
}  // namespace

KernelMoments kernel_moments(KernelKind kind) {
    static const std::array<KernelMoments, 5> table = [] {
        std::array<KernelMoments, 5> t;
        for (int k = 0; k < 5; ++k) t[k] = compute_moments(static_cast<KernelKind>(k));
        return t;
    }();
    return table[static_cast<int>(kind)];
}

double kde_estimate(const AngularSample& sample, const KernelSpec& spec, double x) {
    if (sample.empty()) throw DomainError("kde_estimate: empty sample");
    check_spec(spec);
    double acc = 0.0;
    for (double t : sample.angles()) acc += scaled_kernel(spec, circular_distance(x, t));
    return acc / static_cast<double>(sample.size());
}

std::vector<double> kde_grid(const AngularSample& sample, const KernelSpec& spec,
                             std::span<const double> xs) {
    if (sample.empty()) throw DomainError("kde_grid: empty sample");
    check_spec(spec);
    std::vector<double> out(xs.size());
    std::vector<double> wrapped(xs.begin(), xs.end());
    for (double& v : wrapped) v = wrap_angle(v);
    const auto poly = [&]() -> std::optional<simd::PolyKernel> {
        switch (spec.kind) {
            case KernelKind::Uniform: return simd::PolyKernel::Uniform;
            case KernelKind::Epanechnikov: return simd::PolyKernel::Epanechnikov;
            case KernelKind::Quartic: return simd::PolyKernel::Quartic;
            default: return std::nullopt;
        }
    }();
    if (poly) {
        simd::kernel_sum(*poly, sample.angles(), spec.bandwidth, wrapped, out);
        return out;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = kde_estimate(sample, spec, wrapped[i]);
    return out;
}

double cos2_estimate(const AngularSample& sample, int m, double x) {
    return kde_estimate(sample, KernelSpec::cos2(m), x);
}

double cos2_fourier_factor(int m, int k) {
    if (m < 1) throw DomainError("cos2_fourier_factor: m must be >= 1");
    const double a = kPi / (2.0 * m);
    // S(c) = int_{-a}^{a} cos(c x) dx
    auto S = [a](double c) { return c == 0.0 ? 2.0 * a : 2.0 * std::sin(c * a) / c; };
    const double kd = static_cast<double>(k), two_m = 2.0 * m;
    // cos^2(mx) = (1 + cos 2mx)/2
    return (m / kPi) * (S(kd) + 0.5 * (S(kd + two_m) + S(kd - two_m)));
}

double plugin_bandwidth_formula(double n, double j2, double k2, double beta) {
    return std::pow(j2 / (n * k2 * k2 * beta), 0.2);
}

double pilot_roughness(const AngularSample& sample) {
    const double n = static_cast<double>(sample.size());
    const SplineDensityEstimate pilot = fit_spline_density(sample, std::pow(n, -0.8));
    double acc = 0.0;
    for (int k = 1; k <= pilot.shrunken.max_order(); ++k) {
        const double kk = static_cast<double>(k) * k;
        acc += kk * kk * std::norm(pilot.shrunken(k));
    }
    // int (f'')^2 dx for f = (1/2pi)(1 + 2 sum Re(c_k e^{-ikx}))
    return acc / kPi;
}

BandwidthChoice bandwidth_plugin(const AngularSample& sample, KernelKind kind) {
    if (sample.size() < 2) throw DomainError("bandwidth_plugin: need n >= 2");
    BandwidthChoice out;
    out.beta = pilot_roughness(sample);
    // rounding noise from a flat pilot counts as degenerate
    if (!(out.beta > 1e-12)) {
        out.beta = 1e-6;
        out.flagged = true;
    }
    const KernelMoments km = kernel_moments(kind);
    out.h = plugin_bandwidth_formula(static_cast<double>(sample.size()), km.j2, km.k2, out.beta);
    if (compact(kind) && out.h > kPi) {
        out.h = kPi;
        out.flagged = true;
    }
    return out;
}

std::vector<double> default_bandwidth_grid(int count, double lo, double hi) {
    std::vector<double> g;
    for (int i = 0; i < count; ++i)
        g.push_back(count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return g;
}

namespace {
double lscv_from_distances(const std::vector<double>& dists, std::size_t n, const KernelSpec& spec) {
    const double nd = static_cast<double>(n);
    // diagonal terms of int fhat^2 (d = 0)
    double conv = nd * circular_self_convolution(spec, 0.0);
    double loo = 0.0;
    for (double d : dists) {
        conv += 2.0 * circular_self_convolution(spec, d);
        loo += 2.0 * scaled_kernel(spec, d);
    }
    return conv / (nd * nd) - 2.0 * loo / (nd * (nd - 1.0));
}

std::vector<double> pair_distances(const AngularSample& sample) {
    const auto& a = sample.angles();
    std::vector<double> d;
    d.reserve(a.size() * (a.size() - 1) / 2);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) d.push_back(circular_distance(a[i], a[j]));
    return d;
}
}  // namespace

double lscv_score(const AngularSample& sample, const KernelSpec& spec) {
    if (sample.size() < 3) throw DomainError("lscv: need n >= 3");
    check_spec(spec);
    return lscv_from_distances(pair_distances(sample), sample.size(), spec);
}

BandwidthChoice bandwidth_cv(const AngularSample& sample, KernelKind kind,
                             const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("bandwidth_cv: empty grid");
    if (sample.size() < 3) throw DomainError("bandwidth_cv: need n >= 3");
    const std::vector<double> dists = pair_distances(sample);
    BandwidthChoice out;
    out.grid = grid;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const KernelSpec spec{kind, grid[i]};
        check_spec(spec);
        const double s = lscv_from_distances(dists, sample.size(), spec);
        out.scores.push_back(s);
        if (s < best || (s == best && grid[i] > grid[best_i])) {
            best = s;
            best_i = i;
        }
    }
    out.h = grid[best_i];
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    out.flagged = out.h == *lo || out.h == *hi;
    return out;
}

int cos2_order_for_bandwidth(double h) {
    return std::max(1, static_cast<int>(std::lround(kPi / (2.0 * h))));
}

}  // namespace circspline
