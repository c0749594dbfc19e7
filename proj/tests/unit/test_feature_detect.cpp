#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "circspline/errors.hpp"
#include "circspline/feature_detect.hpp"
#include "circspline/sim_harness.hpp"

using namespace circspline;

namespace {
std::vector<double> uniform_on(double a, double b, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(a, b);
    std::vector<double> v(n);
    for (auto& t : v) t = wrap_angle(u(rng));
    return v;
}

bool near_feature(const DetectionReport& rep, double loc, double tol) {
    for (const auto& f : rep.features) {
        if (f.kind == FeatureKind::SupportBoundary) {
            if (circular_distance(f.location, loc) <= tol) return true;
        } else {
            const Arc w{wrap_angle(f.interval.start - tol), f.interval.length + 2 * tol};
            if (w.contains(loc)) return true;
        }
    }
    return false;
}
}  // namespace

TEST_CASE("dyadic cells nest and cover") {
    for (int l = 2; l <= 6; ++l) {
        const std::size_t m = DyadicPartition::cell_count(l);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const Arc c = DyadicPartition::cell(l, j);
            total += c.length;
            CHECK(c.start == doctest::Approx(kTwoPi * j / m));
            const Arc a = DyadicPartition::cell(l + 1, 2 * j), b = DyadicPartition::cell(l + 1, 2 * j + 1);
            CHECK(a.start == doctest::Approx(c.start));
            CHECK(b.start + b.length == doctest::Approx(c.start + c.length));
        }
        CHECK(total == doctest::Approx(kTwoPi));
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        const std::size_t j = DyadicPartition::cell_of(7, x);
        CHECK(DyadicPartition::cell(7, j).contains(x));
        CHECK(DyadicPartition::cell_of(6, x) == j / 2);
    }
    CHECK(default_max_layer(1000) == 9);
    CHECK(default_max_layer(10) == 3);
}

TEST_CASE("occupancy p-value against the binomial CDF") {
    CHECK(occupancy_pvalue(0, 100) == doctest::Approx(1.0 - std::pow(0.99, 100)).epsilon(1e-12));
    CHECK(occupancy_pvalue(0, 100) == doctest::Approx(0.6340).epsilon(1e-4));
    const double f1 = std::pow(0.99, 100) + 100 * 0.01 * std::pow(0.99, 99);
    CHECK(occupancy_pvalue(1, 100) == doctest::Approx(1.0 - f1).epsilon(1e-12));
    CHECK(occupancy_pvalue(1, 100) == doctest::Approx(0.2642).epsilon(1e-3));
    CHECK(occupancy_pvalue(100, 100) < 1e-15);
    // nonincreasing in the count
    double prev = 1.0;
    for (std::size_t t = 0; t <= 20; ++t) {
        const double p = occupancy_pvalue(t, 500);
        CHECK(p <= prev);
        CHECK(p >= 0.0);
        prev = p;
    }
}

TEST_CASE("support test on a cell") {
    const Arc cell{1.0, 0.4};
    // both halves occupied: strong evidence of support
    AngularSample full(uniform_on(1.0, 1.4, 50, 1));
    CHECK(support_outlier_test(full, cell) < 1e-6);
    // empty cell: T = 0 on both halves
    AngularSample away(uniform_on(3.0, 4.0, 100, 2));
    CHECK(support_outlier_test(away, cell) == doctest::Approx(occupancy_pvalue(0, 100)));
    // one half occupied: the reported p is the smaller of the two halves
    AngularSample right(uniform_on(1.25, 1.4, 40, 3));
    CHECK(support_outlier_test(right, cell) < 1e-6);
}

TEST_CASE("local LRT: null, separation, power") {
    const Arc cell{2.0, 0.5};
    std::vector<double> even;
    for (int i = 0; i < 400; ++i) even.push_back(2.0 + 0.5 * (i + 0.5) / 400);
    const auto flat = discontinuity_edge_test(even, cell);
    CHECK(flat.kind == LocalKind::None);
    CHECK(flat.p_value > 0.9);

    // a layer-5 cell; on long cells the [-50, 50] box lets the no-jump fit mimic the step
    const Arc c5 = DyadicPartition::cell(5, 10);
    std::vector<double> right = uniform_on(c5.midpoint() + 1e-3, c5.start + c5.length, 30, 4);
    const auto sep = discontinuity_edge_test(right, c5);
    CHECK(sep.kind == LocalKind::Discontinuity);
    CHECK(sep.p_value < 0.01);

    const auto few = discontinuity_edge_test(std::vector<double>{2.1, 2.2, 2.3, 2.4}, cell);
    CHECK(few.kind == LocalKind::None);
    CHECK(few.p_value == 1.0);

    ExpFamilyParams p;
    p.beta1 = 2.0;
    p.interval = cell;
    p.x0 = cell.midpoint();
    int hits = 0;
    const int R = 500;
    for (int r = 0; r < R; ++r) {
        const AngularSample s = sample_local_model(p, 200, replicate_seed(11, r));
        if (discontinuity_edge_test(s.angles(), cell).kind == LocalKind::Discontinuity) ++hits;
    }
    CHECK(hits >= 450);
}

TEST_CASE("edge LRT detects a kink") {
    const Arc cell{0.5, 1.0};
    ExpFamilyParams p;
    p.beta0 = 3.0;
    p.beta2 = -6.0;  // slope +3 then -3: a tent
    p.interval = cell;
    p.x0 = cell.midpoint();
    int edges = 0;
    for (int r = 0; r < 100; ++r) {
        const AngularSample s = sample_local_model(p, 400, replicate_seed(12, r));
        if (discontinuity_edge_test(s.angles(), cell).kind == LocalKind::Edge) ++edges;
    }
    CHECK(edges >= 80);
}

TEST_CASE("layer weights and aggregation") {
    for (std::size_t m = 1; m <= 10; ++m) {
        const auto w = layer_weights(m);
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        for (std::size_t i = 1; i < m; ++i) CHECK(w[i] < w[i - 1]);
    }
    const auto w3 = layer_weights(3);
    CHECK(aggregate_pvalues({0, {0.3, 0.3, 0.3}}, w3) == doctest::Approx(0.3));
    CHECK(aggregate_pvalues({0, {1.0, 1.0, 1.0}}, w3) == 1.0);
    CHECK(aggregate_pvalues({0, {0.2, 0.0, 0.9}}, w3) == 0.0);
    const std::vector<double> w2{2.0 / 3.0, 1.0 / 3.0};
    CHECK(aggregate_pvalues({0, {0.04, 0.25}}, w2) ==
          doctest::Approx(std::pow(0.04, 2.0 / 3.0) * std::pow(0.25, 1.0 / 3.0)).epsilon(1e-14));
    CHECK(aggregate_pvalues({0, {0.04, 0.25}}, w2) == doctest::Approx(0.0737).epsilon(1e-3));

    CHECK_THROWS_AS(aggregate_pvalues({0, {0.1, 0.2}}, w3), DomainError);
    CHECK_THROWS_AS(aggregate_pvalues({0, {0.1, 0.2}}, std::vector<double>{0.5, 0.5}), DomainError);
    CHECK_THROWS_AS(aggregate_pvalues({0, {0.1, 0.2}}, std::vector<double>{0.7, 0.2}), DomainError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto w6 = layer_weights(6);
    for (int i = 0; i < 500; ++i) {
        PValueProfile prof{0, std::vector<double>(6)};
        for (auto& p : prof.pvals) p = u(rng);
        const double a = aggregate_pvalues(prof, w6);
        CHECK(a >= *std::min_element(prof.pvals.begin(), prof.pvals.end()) - 1e-15);
        CHECK(a <= *std::max_element(prof.pvals.begin(), prof.pvals.end()) + 1e-15);
    }
}

TEST_CASE("Holm step-down") {
    CHECK(holm(std::vector<double>{0.001, 0.02, 0.3}, 0.05) == std::vector<std::size_t>{0, 1});
    CHECK(holm(std::vector<double>{1.0, 1.0, 1.0}, 0.05).empty());
    const double a = 0.05;
    const std::vector<double> edge(7, a / 7 - 1e-9);
    CHECK(holm(edge, a).size() == 7);
    // stops at the first acceptance: 0.02 >= 0.05/3 keeps 0.03 and 0.04 from being tested
    CHECK(holm(std::vector<double>{0.02, 0.001, 0.04, 0.03}, 0.05) == std::vector<std::size_t>{1});

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.05);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> p(12);
        for (auto& v : p) v = u(rng) * u(rng) * 20.0;
        const auto base = holm(p, 0.05);
        // permutation invariance
        std::vector<std::size_t> perm(p.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> q(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[perm[i]];
        std::vector<std::size_t> back;
        for (std::size_t i : holm(q, 0.05)) back.push_back(perm[i]);
        std::sort(back.begin(), back.end());
        CHECK(back == base);
        // monotone in alpha
        const auto wider = holm(p, 0.1);
        for (std::size_t i : base) CHECK(std::find(wider.begin(), wider.end(), i) != wider.end());
    }
}

TEST_CASE("uniform null: family-wise rejection rate") {
    const std::size_t R = 200;
    std::size_t any = 0;
    DetectionConfig cfg;
    for (std::size_t r = 0; r < R; ++r) {
        const AngularSample s = sample_scenario(Scenario::uniform(), 1000, replicate_seed(21, r));
        const auto rep = detect_features(s, cfg);
        if (!rep.features.empty()) ++any;
        CHECK(rep.support_exterior.empty());
    }
    CHECK(static_cast<double>(any) / R <= 0.05 + 3.0 * std::sqrt(0.05 / R));
}

TEST_CASE("uniform plus triangular: support endpoints") {
    const Scenario sc = Scenario::unif_triangular();
    const double tol = 2 * DyadicPartition::cell_width(9);
    const double ends[] = {5 * kPi / 4, 7 * kPi / 4, kPi / 4, 3 * kPi / 4};
    int all = 0;
    const int R = 100;
    for (int r = 0; r < R; ++r) {
        const auto rep = detect_features(sample_scenario(sc, 1000, replicate_seed(22, r)), DetectionConfig{});
        bool ok = true;
        for (double e : ends) {
            bool hit = false;
            for (const auto& f : rep.features)
                if (f.kind == FeatureKind::SupportBoundary && circular_distance(f.location, e) <= tol) hit = true;
            ok = ok && hit;
        }
        if (ok) ++all;
        for (const auto& a : rep.support_exterior) {
            CHECK(a.start >= 0.0);
            CHECK(a.start < kTwoPi);
        }
    }
    CHECK(all >= 90);
}

TEST_CASE("normal plus two atoms: outliers at the atoms") {
    const Scenario sc = Scenario::eps_mixture(0.05);
    int both = 0;
    for (int r = 0; r < 50; ++r) {
        const AngularSample s = sample_scenario(sc, 1000, replicate_seed(23, r));
        const auto rep = detect_features(s, DetectionConfig{});
        bool a = false, b = false;
        for (const auto& f : rep.features) {
            if (f.kind != FeatureKind::Outlier) continue;
            const double reach = 0.5 * f.interval.length + 1e-9;
            if (circular_distance(f.interval.midpoint(), 3 * kPi / 4) <= reach) a = true;
            if (circular_distance(f.interval.midpoint(), 5 * kPi / 4) <= reach) b = true;
        }
        if (a && b) ++both;
        // every point exactly at an atom is removed
        std::size_t at_atoms = 0;
        for (double x : s.angles())
            if (circular_distance(x, 3 * kPi / 4) < 1e-9 || circular_distance(x, 5 * kPi / 4) < 1e-9) ++at_atoms;
        CHECK(rep.removed_points.size() >= at_atoms);
    }
    CHECK(both >= 48);
}

TEST_CASE("several discontinuities: the large jumps are found") {
    const Scenario sc = Scenario::piecewise_uniform();
    const double tol = 2 * DyadicPartition::cell_width(9);
    int three = 0;
    const int R = 50;
    for (int r = 0; r < R; ++r) {
        const auto rep = detect_features(sample_scenario(sc, 1000, replicate_seed(24, r)), DetectionConfig{});
        int found = 0;
        for (double loc : sc.feature_locations()) found += near_feature(rep, loc, tol);
        if (found >= 3) ++three;
        CHECK(near_feature(rep, kPi / 2, tol));
        CHECK(near_feature(rep, 3 * kPi / 2, tol));
    }
    CHECK(three >= R / 2);
}

TEST_CASE("rotation equivariance") {
    const Scenario sc = Scenario::unif_triangular();
    const double cw = DyadicPartition::cell_width(9);
    auto rotated = [](const AngularSample& s, double d) {
        std::vector<double> v;
        for (double x : s.angles()) v.push_back(wrap_angle(x + d));
        return AngularSample(v);
    };
    for (int r = 0; r < 5; ++r) {
        const AngularSample s = sample_scenario(sc, 1000, replicate_seed(25, r));
        const auto a = detect_features(s, DetectionConfig{});
        // a shift by whole half-cells of the coarsest layer maps every tested cell onto a tested cell
        const double delta = 3 * kTwoPi / 16;
        const auto b = detect_features(rotated(s, delta), DetectionConfig{});
        REQUIRE(a.features.size() == b.features.size());
        for (const auto& f : a.features) {
            bool match = false;
            for (const auto& g : b.features)
                if (g.kind == f.kind && circular_distance(g.location, wrap_angle(f.location + delta)) <= 1e-9 &&
                    std::abs(g.aggregated_p - f.aggregated_p) <= 1e-9 * std::max(1e-300, f.aggregated_p) + 1e-300)
                    match = true;
            CHECK(match);
        }
        // any other shift: support boundaries move with the data up to the quantization of the
        // coarsest tested half-cells, which dominate the aggregated occupancy evidence
        const double odd = 37 * cw + 0.3 * cw;
        const auto c = detect_features(rotated(s, odd), DetectionConfig{});
        for (const auto& f : a.features) {
            if (f.kind != FeatureKind::SupportBoundary) continue;
            bool match = false;
            for (const auto& g : c.features)
                if (g.kind == f.kind &&
                    circular_distance(g.location, wrap_angle(f.location + odd)) <= kTwoPi / 16 + 1e-9)
                    match = true;
            CHECK(match);
        }
    }
}

TEST_CASE("report invariants") {
    const auto rep = detect_features(sample_scenario(Scenario::piecewise_uniform(), 1000, 77), DetectionConfig{});
    for (std::size_t i = 0; i < rep.features.size(); ++i) {
        const auto& f = rep.features[i];
        CHECK(f.interval.start >= 0.0);
        CHECK(f.interval.start < kTwoPi);
        CHECK(f.aggregated_p >= 0.0);
        CHECK(f.aggregated_p <= 1.0);
        for (std::size_t j = i + 1; j < rep.features.size(); ++j) {
            const auto& g = rep.features[j];
            CHECK_FALSE((g.kind == f.kind && g.interval.start == f.interval.start &&
                         g.interval.length == f.interval.length));
        }
    }
    CHECK(feature_kind_from_name("discontinuity") == FeatureKind::Discontinuity);
    CHECK_FALSE(feature_kind_from_name("bogus").has_value());
    CHECK_THROWS_AS(detect_features(AngularSample(std::vector<double>{1.0}), DetectionConfig{2}), DomainError);
}
