#pragma once

#include <span>
#include <vector>

#include "circspline/arc.hpp"
#include "circspline/circle_core.hpp"
#include "circspline/fourier_spline.hpp"
#include "circspline/local_model.hpp"

namespace circspline {

struct DetectionReport;

/// exp(-tan^2(pi d / (2 sigma))) for circular displacement |d| < sigma, else 0.
struct BumpFunction {
    double center = 0.0;
    double sigma = 1.0;
};

double bump_eval(const BumpFunction& b, double x);

struct SigmaRule {
    double finest_half_width = kPi / 512.0;
    double multiplier = 1.5;
};

struct PartitionOfUnity {
    std::vector<BumpFunction> bumps;
    std::vector<Arc> regions;  // detected feature regions, one per bump
    bool crowded = false;      // some sigma was shrunk below the region half-width

    double sum(double x) const;
    double complement(double x) const { return 1.0 - sum(x); }
    /// Support arc (center - sigma, center + sigma) of bump i.
    Arc support(std::size_t i) const;
};

PartitionOfUnity build_partition(const std::vector<Arc>& regions, const SigmaRule& rule);
/// Bumps for the Outlier, Discontinuity and Edge features of a report.
PartitionOfUnity build_partition(const DetectionReport& report, const SigmaRule& rule);

struct LocalComponent {
    ExpFamilyParams params;
    double mass = 0.0;  // share of the sample inside the bump support
};

struct CombineOptions {
    std::vector<Arc> zero_arcs;  // support exterior, forced to 0
    int grid_points = 8192;
};

/// Result of the recombination, tabulated on an equally spaced grid and normalized by the
/// trapezoid rule on that grid. Values are densities with respect to arc length.
struct CombinedDensityEstimate {
    std::vector<double> grid;
    std::vector<double> values;
    double normalizer = 1.0;
    SplineDensityEstimate smooth;
    std::vector<LocalComponent> locals;
    PartitionOfUnity partition;
    std::vector<Arc> zero_arcs;
    int clipped_points = 0;

    /// Unnormalized combination at x (before clipping).
    double raw(double x) const;
    /// Linear interpolation on the grid, or the component formula when exact.
    double evaluate(double x, bool exact = false) const;
};

CombinedDensityEstimate combine(const PartitionOfUnity& pu, const std::vector<LocalComponent>& locals,
                                const SplineDensityEstimate& smooth, const CombineOptions& options);

}  // namespace circspline
