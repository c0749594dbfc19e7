#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "circspline/errors.hpp"
#include "circspline/pipeline.hpp"
#include "circspline/sim_harness.hpp"

using namespace circspline;

namespace {
double trapezoid(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s * kTwoPi / static_cast<double>(v.size());
}

std::vector<Scenario> fixtures() {
    return {Scenario::eps_mixture(0.05), Scenario::wrapped_bimodal(0.8), Scenario::unif_triangular(),
            Scenario::piecewise_uniform(), Scenario::uniform()};
}
}  // namespace

TEST_CASE("uniform data: flat output, no features") {
    int flat = 0, clean = 0;
    const int R = 100;
    for (int r = 0; r < R; ++r) {
        const auto res = estimate(sample_scenario(Scenario::uniform(), 1000, replicate_seed(31, r)));
        const auto& v = res.estimate.values;
        const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
        if (lo >= 1.0 / kTwoPi - 0.05 && hi <= 1.0 / kTwoPi + 0.05) ++flat;
        if (res.report.features.empty()) ++clean;
    }
    CHECK(flat >= 90);
    CHECK(clean >= 95);
}

TEST_CASE("normalization and nonnegativity on every fixture") {
    for (const auto& sc : fixtures()) {
        for (int r = 0; r < 5; ++r) {
            const auto res = estimate(sample_scenario(sc, 1000, replicate_seed(32, r)));
            const auto& v = res.estimate.values;
            const std::string nm = sc.name();
            CAPTURE(nm);
            CHECK(v.size() == 1024);
            CHECK(trapezoid(v) == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(*std::min_element(v.begin(), v.end()) >= 0.0);
            // fine quadrature of the interpolant
            const int M = 1 << 15;
            double s = 0.0;
            for (int i = 0; i < M; ++i) s += res(kTwoPi * (i + 0.5) / M);
            CHECK(s * kTwoPi / M == doctest::Approx(1.0).epsilon(1e-6));
            for (const auto& a : res.report.support_exterior) CHECK(res(a.midpoint()) == 0.0);
        }
    }
}

TEST_CASE("detection disabled reduces to the renormalized spline fit") {
    const AngularSample s = sample_scenario(Scenario::wrapped_bimodal(0.8), 500, 33);
    PipelineConfig cfg;
    cfg.detection = false;
    const auto res = estimate(s, cfg);
    CHECK(res.detection_skipped);
    CHECK(res.report.features.empty());
    const auto fit = fit_spline_density(s, res.lambda.lambda);
    CHECK(res.lambda.lambda == select_lambda(empirical_fourier(s, default_order(s.size())), s.size(),
                                             LambdaGrid::log_spaced())
                                   .lambda);
    std::vector<double> v(1024);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, fit(kTwoPi * i / 1024.0) / kTwoPi);
    const double z = trapezoid(v);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(res.estimate.values[i] == doctest::Approx(v[i] / z).epsilon(1e-10));
}

TEST_CASE("small samples skip detection") {
    const AngularSample s = sample_scenario(Scenario::unif_triangular(), 15, 34);
    const auto res = estimate(s);
    CHECK(res.detection_skipped);
    CHECK_FALSE(res.warnings.empty());
    CHECK(trapezoid(res.estimate.values) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(estimate(AngularSample(std::vector<double>{})), DomainError);
}

TEST_CASE("evaluate: grid nodes, exact path, interpolation") {
    // wide components: no empty arc, so the fit has no support jump
    const auto res = estimate(sample_scenario(Scenario::wrapped_bimodal(0.8, 1.5), 1000, 35));
    REQUIRE(res.report.support_exterior.empty());
    const auto& e = res.estimate;
    for (std::size_t i = 0; i < e.grid.size(); i += 7) CHECK(e.evaluate(e.grid[i]) == e.values[i]);
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    double worst = 0.0;
    for (int i = 0; i < 4096; ++i) {
        const double x = u(rng);
        worst = std::max(worst, std::abs(e.evaluate(x, true) - e.evaluate(x)));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("determinism") {
    const AngularSample s = sample_scenario(Scenario::piecewise_uniform(), 1000, 36);
    const auto a = estimate(s), b = estimate(s);
    CHECK(a.estimate.values == b.estimate.values);
    REQUIRE(a.report.features.size() == b.report.features.size());
    for (std::size_t i = 0; i < a.report.features.size(); ++i) {
        CHECK(a.report.features[i].interval == b.report.features[i].interval);
        CHECK(a.report.features[i].aggregated_p == b.report.features[i].aggregated_p);
    }
    CHECK(a.lambda.lambda == b.lambda.lambda);
}

TEST_CASE("outliers: located, removed, and phase 1 is idempotent") {
    const Scenario sc = Scenario::eps_mixture(0.05);
    for (int r = 0; r < 10; ++r) {
        const AngularSample s = sample_scenario(sc, 1000, replicate_seed(37, r));
        const auto res = estimate(s);
        std::vector<Arc> outl;
        for (const auto& f : res.report.features)
            if (f.kind == FeatureKind::Outlier) outl.push_back(f.interval);
        REQUIRE(outl.size() >= 2);
        std::vector<double> kept;
        std::vector<char> gone(s.size(), 0);
        for (std::size_t i : res.report.removed_points) gone[i] = 1;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (!gone[i]) kept.push_back(s[i]);
        DetectionConfig dc;
        dc.max_layer = default_max_layer(s.size());
        const auto again = detect_features(AngularSample(kept), dc);
        for (const auto& f : again.features) {
            if (f.kind != FeatureKind::Outlier) continue;
            for (const Arc& a : outl) CHECK_FALSE(circular_distance(f.interval.midpoint(), a.midpoint()) < a.length);
        }
    }
}

TEST_CASE("rotation by a coarse half-cell rotates the estimate") {
    const AngularSample s = sample_scenario(Scenario::unif_triangular(), 1000, 38);
    const double delta = 3 * kTwoPi / 16;  // 192 output grid steps
    std::vector<double> v;
    for (double x : s.angles()) v.push_back(wrap_angle(x + delta));
    const auto a = estimate(s), b = estimate(AngularSample(v));
    CHECK(a.lambda.lambda == b.lambda.lambda);
    const std::size_t m = a.estimate.values.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        worst = std::max(worst, std::abs(b.estimate.values[(i + 192) % m] - a.estimate.values[i]));
    CHECK(worst < 1e-8);
}

TEST_CASE("locals match the detected regions") {
    const auto res = estimate(sample_scenario(Scenario::piecewise_uniform(), 1000, 39));
    std::size_t regions = 0;
    for (const auto& f : res.report.features)
        if (f.kind != FeatureKind::SupportBoundary) ++regions;
    CHECK(res.estimate.locals.size() == res.estimate.partition.bumps.size());
    CHECK(res.estimate.partition.bumps.size() == regions);
    double mass = 0.0;
    for (const auto& l : res.estimate.locals) {
        CHECK(l.mass >= 0.0);
        mass += l.mass;
    }
    CHECK(mass <= 1.0);
}
