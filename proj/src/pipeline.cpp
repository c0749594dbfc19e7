#include "circspline/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "circspline/errors.hpp"

namespace circspline {

namespace {
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const EstimationError&) {
        throw;
    } catch (const DomainError&) {
        throw;
    } catch (const std::exception& e) {
        throw EstimationError(name, e.what());
    }
}
}  // namespace

PipelineResult estimate(const AngularSample& sample, const PipelineConfig& cfg) {
    if (sample.empty()) throw DomainError("estimate: empty sample");
    const std::size_t n = sample.size();
    PipelineResult out;
    const int L = cfg.max_layer > 0 ? cfg.max_layer : default_max_layer(n);

    // steps 1-3: layers, support/outlier tests, removal, jump/edge tests
    out.report.max_layer = L;
    out.report.alpha = cfg.alpha;
    out.report.first_layer = cfg.first_layer;
    if (!cfg.detection || n < cfg.min_detection_points) {
        out.detection_skipped = true;
        if (cfg.detection) out.warnings.push_back("sample below detection minimum; pure spline fit");
    } else {
        DetectionConfig dc;
        dc.max_layer = L;
        dc.first_layer = cfg.first_layer;
        dc.alpha = cfg.alpha;
        dc.outlier_max_fraction = cfg.outlier_max_fraction;
        dc.outlier_max_arc = cfg.outlier_max_arc;
        out.report = stage("detect", [&] { return detect_features(sample, dc); });
    }

    // steps 4-5a: partition of unity over the localized features
    SigmaRule rule = cfg.sigma_rule;
    rule.finest_half_width = 0.5 * DyadicPartition::cell_width(L);
    const PartitionOfUnity pu = stage("partition", [&] { return build_partition(out.report, rule); });
    if (pu.crowded) out.warnings.push_back("feature regions crowded; bump widths shrunk");

    std::vector<char> removed(n, 0);
    for (std::size_t i : out.report.removed_points) removed[i] = 1;

    // step 5b: local exponential fits on each bump support
    std::vector<LocalComponent> locals;
    stage("local", [&] {
        for (std::size_t i = 0; i < pu.bumps.size(); ++i) {
            const Arc support = pu.support(i);
            const double x0 = pu.bumps[i].center;
            std::vector<double> pts;
            for (double a : sample.angles())
                if (support.contains(a)) pts.push_back(a);
            LocalComponent lc;
            lc.params = fit_mle(pts, x0, support);
            lc.mass = static_cast<double>(pts.size()) / static_cast<double>(n);
            locals.push_back(lc);
        }
        return 0;
    });

    // step 6: weighted smooth fit
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j)
        w[j] = removed[j] ? 0.0 : std::clamp(1.0 - pu.sum(sample[j]), 0.0, 1.0);
    const int K = default_order(n);
    const FourierCoefficients u = weighted_fourier(sample, w, K);
    double m2 = 0.0;
    for (double v : w) m2 += v * v;
    m2 /= static_cast<double>(n);
    SplineDensityEstimate smooth = stage("smooth", [&] {
        if (cfg.fixed_lambda) {
            out.lambda.lambda = *cfg.fixed_lambda;
            out.lambda.best = empirical_mise(u, *cfg.fixed_lambda, n, MiseCorrection::BiasCorrected, m2);
        } else {
            out.lambda = select_lambda(u, n, cfg.lambda_grid, MiseCorrection::BiasCorrected, m2);
        }
        return fit_spline_density_weighted(sample, w, out.lambda.lambda, K);
    });

    // step 7: recombine and normalize
    CombineOptions opts;
    opts.grid_points = cfg.grid_points;
    opts.zero_arcs = out.report.support_exterior;
    out.estimate = stage("combine", [&] { return combine(pu, locals, smooth, opts); });
    return out;
}

}  // namespace circspline
