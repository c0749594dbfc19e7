#include "circspline/partition_unity.hpp"

#include <algorithm>
#include <cmath>

#include "circspline/errors.hpp"
#include "circspline/feature_detect.hpp"

namespace circspline {

double bump_eval(const BumpFunction& b, double x) {
    if (!(b.sigma > 0.0)) throw DomainError("bump_eval: sigma must be > 0");
    const double d = signed_displacement(b.center, x);
    if (std::abs(d) >= b.sigma) return 0.0;
    const double t = std::tan(kPi * d / (2.0 * b.sigma));
    return std::exp(-t * t);
}

double PartitionOfUnity::sum(double x) const {
    double s = 0.0;
    for (const auto& b : bumps) s += bump_eval(b, x);
    return s;
}

Arc PartitionOfUnity::support(std::size_t i) const {
    return Arc::centered(bumps[i].center, bumps[i].sigma);
}

PartitionOfUnity build_partition(const std::vector<Arc>& regions, const SigmaRule& rule) {
    PartitionOfUnity pu;
    pu.regions = regions;
    const std::size_t m = regions.size();
    for (std::size_t i = 0; i < m; ++i) {
        const double half = 0.5 * regions[i].length;
        double sigma = std::max(half, rule.multiplier * rule.finest_half_width);
        sigma = std::min(sigma, kPi);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double gap = circular_distance(regions[i].midpoint(), regions[j].midpoint());
            sigma = std::min(sigma, 0.5 * gap);
        }
        if (sigma < half) pu.crowded = true;
        if (!(sigma > 0.0)) throw EstimationError("partition", "coincident feature regions");
        pu.bumps.push_back({regions[i].midpoint(), sigma});
    }
    return pu;
}

PartitionOfUnity build_partition(const DetectionReport& report, const SigmaRule& rule) {
    std::vector<Arc> regions;
    for (const auto& f : report.features)
        if (f.kind != FeatureKind::SupportBoundary) regions.push_back(f.interval);
    return build_partition(regions, rule);
}

namespace {
bool in_any(const std::vector<Arc>& arcs, double x) {
    return std::any_of(arcs.begin(), arcs.end(), [x](const Arc& a) { return a.contains(x); });
}

double local_part(const PartitionOfUnity& pu, const std::vector<LocalComponent>& locals, double x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pu.bumps.size(); ++i) {
        const double r = bump_eval(pu.bumps[i], x);
        if (r == 0.0 || !locals[i].params.interval.contains(x)) continue;
        acc += r * locals[i].mass * exp_density(locals[i].params, x);
    }
    return acc;
}

double smooth_part(const SplineDensityEstimate& s, double value) {
    // the weighted fit keeps u_0 = 1; the smooth component carries only the retained mass
    return (value - 1.0 + s.mass) / kTwoPi;
}
}  // namespace

double CombinedDensityEstimate::raw(double x) const {
    x = wrap_angle(x);
    if (in_any(zero_arcs, x)) return 0.0;
    return local_part(partition, locals, x) + smooth_part(smooth, smooth(x));
}

double CombinedDensityEstimate::evaluate(double x, bool exact) const {
    x = wrap_angle(x);
    if (exact) return std::max(raw(x), 0.0) / normalizer;
    const std::size_t n = values.size();
    const double pos = x / kTwoPi * static_cast<double>(n);
    // grid nodes come back exactly despite rounding in pos
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-9) return values[static_cast<std::size_t>(nearest) % n];
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= n) i = n - 1;
    const double f = pos - static_cast<double>(i);
    return (1.0 - f) * values[i] + f * values[(i + 1) % n];
}

CombinedDensityEstimate combine(const PartitionOfUnity& pu, const std::vector<LocalComponent>& locals,
                                const SplineDensityEstimate& smooth, const CombineOptions& options) {
    if (locals.size() != pu.bumps.size())
        throw DomainError("combine: one local component per bump required");
    if (options.grid_points < 8) throw DomainError("combine: grid too small");
    CombinedDensityEstimate est;
    est.smooth = smooth;
    est.locals = locals;
    est.partition = pu;
    est.zero_arcs = options.zero_arcs;
    const int n = options.grid_points;
    est.grid.resize(n);
    for (int i = 0; i < n; ++i) est.grid[i] = kTwoPi * i / n;
    const std::vector<double> sm = smooth.evaluate(est.grid);
    est.values.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = est.grid[i];
        double v = 0.0;
        if (!in_any(est.zero_arcs, x)) v = local_part(pu, locals, x) + smooth_part(smooth, sm[i]);
        if (v < 0.0) {
            v = 0.0;
            ++est.clipped_points;
        }
        est.values[i] = v;
        total += v;
    }
    est.normalizer = total * kTwoPi / n;
    if (!(est.normalizer > 0.0) || !std::isfinite(est.normalizer))
        throw EstimationError("combine", "normalization constant is not positive");
    for (double& v : est.values) v /= est.normalizer;
    return est;
}

}  // namespace circspline
