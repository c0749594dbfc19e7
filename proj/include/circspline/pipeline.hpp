#pragma once

#include <optional>
#include <string>
#include <vector>

#include "circspline/feature_detect.hpp"
#include "circspline/fourier_spline.hpp"
#include "circspline/partition_unity.hpp"

namespace circspline {

struct PipelineConfig {
    int max_layer = 0;  // 0: default_max_layer(n)
    double alpha = 0.05;
    LambdaGrid lambda_grid = LambdaGrid::log_spaced();
    std::optional<double> fixed_lambda;  // skip selection when set
    int first_layer = 3;
    SigmaRule sigma_rule{};  // finest_half_width is derived from the layer when left at 0
    int grid_points = 1024;
    bool detection = true;
    double outlier_max_fraction = 0.10;
    double outlier_max_arc = kPi / 4;
    std::size_t min_detection_points = 20;
};

struct PipelineResult {
    CombinedDensityEstimate estimate;
    DetectionReport report;
    LambdaSelection lambda;
    bool detection_skipped = false;
    std::vector<std::string> warnings;

    double operator()(double x, bool exact = false) const { return estimate.evaluate(x, exact); }
};

PipelineResult estimate(const AngularSample& sample, const PipelineConfig& cfg = {});

}  // namespace circspline
