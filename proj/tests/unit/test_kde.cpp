#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "circspline/errors.hpp"
#include "circspline/kde.hpp"
#include "circspline/sim_harness.hpp"

using namespace circspline;

namespace {
std::vector<double> random_angles(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    std::vector<double> v(n);
    for (auto& t : v) t = u(rng);
    return v;
}
std::vector<double> grid(std::size_t m) {
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(m);
    return g;
}
double direct_kde(const std::vector<double>& th, KernelKind kind, double h, double x) {
    double s = 0.0;
    for (double t : th) {
        const double d = std::min(std::abs(x - t), kTwoPi - std::abs(x - t));
        s += kernel_profile(kind, d / h) / h;
    }
    return s / static_cast<double>(th.size());
}
// exact integral of a piecewise polynomial of degree <= 5 given its breakpoints
template <class F>
double piecewise_integral(F f, std::vector<double> breaks) {
    breaks.push_back(0.0);
    breaks.push_back(kTwoPi);
    for (auto& b : breaks) b = std::clamp(b, 0.0, kTwoPi);
    std::sort(breaks.begin(), breaks.end());
    const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)}, gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
    double s = 0.0;
    for (std::size_t i = 1; i < breaks.size(); ++i) {
        const double a = breaks[i - 1], b = breaks[i], m = 0.5 * (a + b), r = 0.5 * (b - a);
        for (int q = 0; q < 3; ++q) s += r * gw[q] * f(m + r * gx[q]);
    }
    return s;
}
}  // namespace

TEST_CASE("kernel profiles integrate to one and moments match") {
    using boost::math::quadrature::gauss_kronrod;
    for (auto kind : {KernelKind::Uniform, KernelKind::Epanechnikov, KernelKind::Quartic, KernelKind::Cos2}) {
        const double i = gauss_kronrod<double, 61>::integrate([&](double z) { return kernel_profile(kind, z); }, -1.0, 1.0);
        CHECK(i == doctest::Approx(kind == KernelKind::Cos2 ? 1.0 : 1.0).epsilon(1e-8));
    }
    const double wn = gauss_kronrod<double, 61>::integrate(
        [](double z) { return kernel_profile(KernelKind::WrappedNormal, z); }, -12.0, 12.0, 10);
    CHECK(wn == doctest::Approx(1.0).epsilon(1e-8));
    const auto ep = kernel_moments(KernelKind::Epanechnikov);
    CHECK(ep.k2 == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(ep.j2 == doctest::Approx(0.6).epsilon(1e-10));
    const auto q = kernel_moments(KernelKind::Quartic);
    CHECK(q.k2 == doctest::Approx(1.0 / 7.0).epsilon(1e-10));
    CHECK(q.j2 == doctest::Approx(5.0 / 7.0).epsilon(1e-10));
    const auto n = kernel_moments(KernelKind::WrappedNormal);
    CHECK(n.k2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(n.j2 == doctest::Approx(1.0 / (2.0 * std::sqrt(kPi))).epsilon(1e-10));
}

TEST_CASE("kde examples") {
    const AngularSample one(std::vector<double>{1.2});
    CHECK(kde_estimate(one, KernelSpec::epanechnikov(0.3), 1.2) == doctest::Approx(0.75 / 0.3));
    CHECK(kde_estimate(one, KernelSpec::quartic(0.3), 1.2) == doctest::Approx(0.9375 / 0.3));
    const AngularSample s(random_angles(100, 1));
    for (double x : grid(13)) CHECK(kde_estimate(s, KernelSpec::uniform(kPi), x) == doctest::Approx(1.0 / kTwoPi));
    for (auto kind : {KernelKind::Uniform, KernelKind::Epanechnikov, KernelKind::Quartic, KernelKind::Cos2})
        for (double x : grid(29))
            REQUIRE(kde_estimate(s, {kind, 0.37}, x) ==
                    doctest::Approx(direct_kde(s.angles(), kind, 0.37, x)).epsilon(1e-12));
    CHECK_THROWS_AS(kde_estimate(AngularSample(std::vector<double>{}), KernelSpec::epanechnikov(0.3), 0.0),
                    DomainError);
    CHECK_THROWS_AS(kde_estimate(s, KernelSpec::epanechnikov(0.0), 0.0), DomainError);
}

TEST_CASE("kde grid agrees with pointwise evaluation") {
    const AngularSample s(random_angles(257, 2));
    const auto g = grid(300);
    for (auto kind : {KernelKind::Uniform, KernelKind::Epanechnikov, KernelKind::Quartic, KernelKind::Cos2,
                      KernelKind::WrappedNormal}) {
        const KernelSpec spec{kind, 0.21};
        const auto v = kde_grid(s, spec, g);
        for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(v[i] == doctest::Approx(kde_estimate(s, spec, g[i])).epsilon(1e-12));
    }
}

TEST_CASE("kde estimates are nonnegative, normalized and rotation invariant") {
    const auto th = random_angles(80, 3);
    const AngularSample s(th);
    std::vector<double> rot(th);
    for (auto& t : rot) t += 0.9;
    const AngularSample r(rot);
    for (auto kind : {KernelKind::Epanechnikov, KernelKind::Quartic, KernelKind::WrappedNormal}) {
        const KernelSpec spec{kind, 0.25};
        const auto g = grid(20000);
        const auto v = kde_grid(s, spec, g);
        double integral = 0.0;
        for (double y : v) {
            REQUIRE(y >= 0.0);
            integral += y;
        }
        CHECK(integral * kTwoPi / 20000.0 == doctest::Approx(1.0).epsilon(1e-6));
        for (double x : {0.0, 1.0, 5.5})
            CHECK(kde_estimate(s, spec, x) == doctest::Approx(kde_estimate(r, spec, x + 0.9)).epsilon(1e-12));
    }
}

TEST_CASE("cos2 estimate") {
    for (int m : {1, 3, 8}) {
        CHECK(cos2_estimate(AngularSample(std::vector<double>{2.0}), m, 2.0) == doctest::Approx(2.0 * m / kPi));
        CHECK(cos2_estimate(AngularSample(std::vector<double>{2.0}), m, 2.0 + kPi / (2.0 * m) + 1e-9) == 0.0);
        const AngularSample s(random_angles(30, 4 + m));
        const auto g = grid(20000);
        double integral = 0.0;
        for (double x : g) integral += cos2_estimate(s, m, x);
        CHECK(integral * kTwoPi / 20000.0 == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(cos2_estimate(s, m, 0.4) == doctest::Approx(kde_estimate(s, KernelSpec::cos2(m), 0.4)).epsilon(1e-12));
    }
}

TEST_CASE("cos2 Fourier factor") {
    using boost::math::quadrature::gauss_kronrod;
    for (int m = 1; m <= 8; ++m) {
        CHECK(cos2_fourier_factor(m, 0) == doctest::Approx(1.0).epsilon(1e-14));
        const double a = kPi / (2.0 * m);
        for (int k = -16; k <= 16; ++k) {
            const double q = gauss_kronrod<double, 61>::integrate(
                [&](double x) { return 2.0 * m / kPi * std::pow(std::cos(m * x), 2) * std::cos(k * x); }, -a, a, 8,
                1e-14);
            REQUIRE(std::abs(cos2_fourier_factor(m, k) - q) < 1e-10);
        }
    }
    CHECK(cos2_fourier_factor(10000, 3) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("plug-in bandwidth") {
    const auto m = kernel_moments(KernelKind::Epanechnikov);
    const double h1 = plugin_bandwidth_formula(100, m.j2, m.k2, 2.0);
    CHECK(plugin_bandwidth_formula(200, m.j2, m.k2, 2.0) / h1 == doctest::Approx(std::pow(2.0, -0.2)).epsilon(1e-14));
    CHECK(plugin_bandwidth_formula(100, m.j2, m.k2, 3.0) < h1);
    CHECK(h1 == doctest::Approx(std::pow(0.6 / (100 * 0.04 * 2.0), 0.2)));

    const auto s = sample_scenario(Scenario::wrapped_bimodal(1.0), 400, 5);
    const auto bc = bandwidth_plugin(s, KernelKind::Epanechnikov);
    CHECK_FALSE(bc.flagged);
    CHECK(bc.beta > 0.0);
    CHECK(bc.beta == doctest::Approx(pilot_roughness(s)));
    CHECK(bc.h == doctest::Approx(plugin_bandwidth_formula(400, m.j2, m.k2, bc.beta)));
    CHECK(bc.h > 0.05);
    CHECK(bc.h < 1.5);

    // perfectly regular points leave no pilot curvature
    std::vector<double> even(64);
    for (std::size_t j = 0; j < even.size(); ++j) even[j] = kTwoPi * j / 64.0;
    const auto flat = bandwidth_plugin(AngularSample(even), KernelKind::Epanechnikov);
    CHECK(flat.flagged);
    CHECK(flat.beta == 1e-6);
}

TEST_CASE("LSCV matches direct leave-one-out computation") {
    const auto th = random_angles(20, 6);
    const AngularSample s(th);
    for (double h : {0.15, 0.6, 2.0}) {
        const KernelSpec spec = KernelSpec::epanechnikov(h);
        std::vector<double> breaks;
        for (double t : th)
            for (double off : {-h, h, 0.0})
                for (double w : {-kTwoPi, 0.0, kTwoPi}) breaks.push_back(t + off + w);
        // pi-periodic distance introduces breaks at antipodes too
        for (double t : th) breaks.push_back(wrap_angle(t + kPi));
        const double sq = piecewise_integral(
            [&](double x) {
                const double f = direct_kde(th, KernelKind::Epanechnikov, h, x);
                return f * f;
            },
            breaks);
        double loo = 0.0;
        for (std::size_t i = 0; i < th.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < th.size(); ++j)
                if (j != i) acc += scaled_kernel(spec, circular_distance(th[i], th[j]));
            loo += acc / 19.0;
        }
        const double expect = sq - 2.0 / 20.0 * loo;
        CHECK(lscv_score(s, spec) == doctest::Approx(expect).epsilon(1e-10));
    }
    // smooth kernel: trapezoid is spectrally accurate
    const KernelSpec wn = KernelSpec::wrapped_normal(0.3);
    const auto g = grid(4096);
    double sq = 0.0;
    for (double x : g) sq += std::pow(kde_estimate(s, wn, x), 2);
    sq *= kTwoPi / 4096.0;
    double loo = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i)
        for (std::size_t j = 0; j < th.size(); ++j)
            if (j != i) loo += scaled_kernel(wn, circular_distance(th[i], th[j])) / 19.0;
    CHECK(lscv_score(s, wn) == doctest::Approx(sq - 2.0 / 20.0 * loo).epsilon(1e-10));
}

TEST_CASE("cross-validation bandwidth") {
    std::vector<double> dup(30, 1.0);
    for (std::size_t j = 0; j < 5; ++j) dup[j] = 1.0 + 0.5 * j;
    const auto g = default_bandwidth_grid();
    const auto bc = bandwidth_cv(AngularSample(dup), KernelKind::Epanechnikov, g);
    CHECK(bc.h == g.front());
    CHECK(bc.flagged);
    CHECK(bc.scores.size() == g.size());
    CHECK_THROWS_AS(bandwidth_cv(AngularSample(dup), KernelKind::Epanechnikov, {}), DomainError);

    int interior = 0;
    for (int r = 0; r < 100; ++r) {
        const auto s = sample_scenario(Scenario::wrapped_bimodal(0.0, 0.5), 500, replicate_seed(77, r));
        if (!bandwidth_cv(s, KernelKind::Epanechnikov, g).flagged) ++interior;
    }
    CHECK(interior >= 90);
}

TEST_CASE("cos2 order from bandwidth") {
    CHECK(cos2_order_for_bandwidth(kPi / 2) == 1);
    CHECK(cos2_order_for_bandwidth(kPi / 20) == 10);
    CHECK(cos2_order_for_bandwidth(10.0) == 1);
    CHECK(KernelSpec::cos2(4).bandwidth == doctest::Approx(kPi / 8));
}
