#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "circspline/arc.hpp"
#include "circspline/circle_core.hpp"
#include "circspline/local_model.hpp"

namespace circspline {

/// Nested arcs A_kj = [2 pi j / 2^k, 2 pi (j+1) / 2^k).
class DyadicPartition {
public:
    explicit DyadicPartition(int max_layer);

    int max_layer() const { return max_layer_; }
    static std::size_t cell_count(int layer) { return std::size_t{1} << layer; }
    static double cell_width(int layer) { return kTwoPi / static_cast<double>(cell_count(layer)); }
    static Arc cell(int layer, std::size_t j);
    static std::size_t cell_of(int layer, double x);

private:
    int max_layer_;
};

struct PValueProfile {
    std::size_t cell = 0;
    std::vector<double> pvals;  // coarse to fine
};

enum class FeatureKind { SupportBoundary, Outlier, Discontinuity, Edge };
const char* feature_kind_name(FeatureKind kind);
std::optional<FeatureKind> feature_kind_from_name(const std::string& name);

struct Feature {
    Arc interval;
    FeatureKind kind = FeatureKind::Edge;
    double aggregated_p = 1.0;
    double alpha = 0.05;
    std::size_t first_cell = 0;  // finest-layer cell ids covered
    std::size_t cell_count = 1;
    double location = 0.0;       // boundary point (support) or interval midpoint
};

struct DetectionReport {
    std::vector<Feature> features;
    std::vector<Arc> support_exterior;
    int max_layer = 0;
    int first_layer = 3;
    double alpha = 0.05;
    std::size_t phase1_tests = 0;
    std::size_t phase2_tests = 0;
    std::vector<std::size_t> removed_points;  // sample indices inside outlier regions

    std::size_t count(FeatureKind kind) const;
};

/// P(X > T) for X ~ Binomial(n, 1/n).
double occupancy_pvalue(std::size_t count, std::size_t n);
/// Smaller occupancy p-value of the two halves of the cell (split at its midpoint).
double support_outlier_test(const AngularSample& sample, const Arc& cell);

enum class LocalKind { None, Discontinuity, Edge };

struct LocalTestResult {
    LocalKind kind = LocalKind::None;
    double p_value = 1.0;
    double jump_statistic = 0.0;
    double kink_statistic = 0.0;
};

/// Likelihood-ratio tests of b1 = 0, then b2 = 0, at level alpha/2 each.
LocalTestResult discontinuity_edge_test(std::span<const double> angles, const Arc& cell,
                                        double alpha = 0.05, std::size_t min_points = 5);
LocalTestResult discontinuity_edge_test(const SufficientStats& stats, double x0, const Arc& cell,
                                        double alpha = 0.05, std::size_t min_points = 5);

/// Normalized weights proportional to 2^{-i}, i = 1..count (coarsest first).
std::vector<double> layer_weights(std::size_t count);
double aggregate_pvalues(const PValueProfile& profile, std::span<const double> weights);
/// Holm step-down; returns rejected indices in ascending order.
std::vector<std::size_t> holm(std::span<const double> pvals, double alpha);

struct DetectionConfig {
    int max_layer = 9;
    int first_layer = 3;
    double alpha = 0.05;
    std::size_t min_lrt_points = 5;
    double outlier_max_fraction = 0.10;
    double outlier_max_arc = kPi / 4;
    bool run_phase2 = true;
};

/// clamp(round(log2 n) - 1, 3, 12)
int default_max_layer(std::size_t n);

DetectionReport detect_features(const AngularSample& sample, const DetectionConfig& cfg);

}  // namespace circspline
