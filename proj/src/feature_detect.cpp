#include "circspline/feature_detect.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <numeric>

#include "circspline/errors.hpp"

namespace circspline {

DyadicPartition::DyadicPartition(int max_layer) : max_layer_(max_layer) {
    if (max_layer < 2 || max_layer > 24) throw DomainError("DyadicPartition: layer out of range");
}

Arc DyadicPartition::cell(int layer, std::size_t j) {
    const double w = cell_width(layer);
    return {w * static_cast<double>(j), w};
}

std::size_t DyadicPartition::cell_of(int layer, double x) {
    const std::size_t m = cell_count(layer);
    auto j = static_cast<std::size_t>(wrap_angle(x) / kTwoPi * static_cast<double>(m));
    return std::min(j, m - 1);
}

const char* feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::SupportBoundary: return "support_boundary";
        case FeatureKind::Outlier: return "outlier";
        case FeatureKind::Discontinuity: return "discontinuity";
        case FeatureKind::Edge: return "edge";
    }
    return "unknown";
}

std::optional<FeatureKind> feature_kind_from_name(const std::string& name) {
    for (auto k : {FeatureKind::SupportBoundary, FeatureKind::Outlier, FeatureKind::Discontinuity,
                   FeatureKind::Edge})
        if (name == feature_kind_name(k)) return k;
    return std::nullopt;
}

std::size_t DetectionReport::count(FeatureKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(features.begin(), features.end(), [kind](const Feature& f) { return f.kind == kind; }));
}

double occupancy_pvalue(std::size_t count, std::size_t n) {
    if (n == 0) throw DomainError("occupancy_pvalue: n must be >= 1");
    if (count >= n) return 0.0;
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 1.0 / static_cast<double>(n));
    return boost::math::cdf(boost::math::complement(dist, static_cast<double>(count)));
}

double support_outlier_test(const AngularSample& sample, const Arc& cell) {
    const double half = 0.5 * cell.length;
    std::size_t left = 0, right = 0;
    for (double a : sample.angles()) {
        if (!cell.contains(a)) continue;
        (cell.offset(a) < half ? left : right) += 1;
    }
    return std::min(occupancy_pvalue(left, sample.size()), occupancy_pvalue(right, sample.size()));
}

namespace {
double chi2_1_sf(double t) { return t <= 0.0 ? 1.0 : std::erfc(std::sqrt(0.5 * t)); }
}  // namespace

LocalTestResult discontinuity_edge_test(const SufficientStats& stats, double x0, const Arc& cell,
                                        double alpha, std::size_t min_points) {
    LocalTestResult out;
    if (stats.count < static_cast<double>(std::max<std::size_t>(min_points, 3))) return out;
    const ExpFamilyParams full = fit_mle(stats, x0, cell, Constraint::None);
    const ExpFamilyParams nojump = fit_mle(stats, x0, cell, Constraint::NoJump);
    out.jump_statistic = std::max(0.0, 2.0 * (full.log_likelihood - nojump.log_likelihood));
    const double p_jump = chi2_1_sf(out.jump_statistic);
    if (p_jump < 0.5 * alpha) {
        out.kind = LocalKind::Discontinuity;
        out.p_value = p_jump;
        return out;
    }
    const ExpFamilyParams nokink = fit_mle(stats, x0, cell, Constraint::NoKink);
    out.kink_statistic = std::max(0.0, 2.0 * (full.log_likelihood - nokink.log_likelihood));
    const double p_kink = chi2_1_sf(out.kink_statistic);
    out.p_value = p_kink;
    out.kind = p_kink < 0.5 * alpha ? LocalKind::Edge : LocalKind::None;
    return out;
}

LocalTestResult discontinuity_edge_test(std::span<const double> angles, const Arc& cell, double alpha,
                                        std::size_t min_points) {
    const double x0 = cell.midpoint();
    return discontinuity_edge_test(sufficient_stats(local_offsets(angles, x0, cell)), x0, cell, alpha,
                                   min_points);
}

std::vector<double> layer_weights(std::size_t count) {
    std::vector<double> w(count);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) total += (w[i] = std::ldexp(1.0, -static_cast<int>(i) - 1));
    for (double& v : w) v /= total;
    return w;
}

double aggregate_pvalues(const PValueProfile& profile, std::span<const double> weights) {
    if (weights.size() != profile.pvals.size())
        throw DomainError("aggregate_pvalues: weight count must match profile length");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        sum += weights[i];
        if (!(weights[i] > 0.0)) throw DomainError("aggregate_pvalues: weights must be positive");
        if (i > 0 && !(weights[i] < weights[i - 1]))
            throw DomainError("aggregate_pvalues: weights must be strictly decreasing");
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("aggregate_pvalues: weights must sum to 1");
    double log_p = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double p = profile.pvals[i];
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("aggregate_pvalues: p outside [0,1]");
        if (p == 0.0) return 0.0;
        log_p += weights[i] * std::log(p);
    }
    return std::clamp(std::exp(log_p), 0.0, 1.0);
}

std::vector<std::size_t> holm(std::span<const double> pvals, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("holm: alpha must be in (0,1)");
    const std::size_t s = pvals.size();
    std::vector<std::size_t> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    std::vector<std::size_t> rejected;
    for (std::size_t r = 0; r < s; ++r) {
        if (!(pvals[order[r]] < alpha / static_cast<double>(s - r))) break;
        rejected.push_back(order[r]);
    }
    std::sort(rejected.begin(), rejected.end());
    return rejected;
}

int default_max_layer(std::size_t n) {
    const double l = std::round(std::log2(static_cast<double>(std::max<std::size_t>(n, 1)))) - 1.0;
    return static_cast<int>(std::clamp(l, 3.0, 12.0));
}

namespace {

struct Run {
    std::size_t first = 0;  // finest cell id
    std::size_t length = 0;
    bool outlier = false;
};

// Maximal runs of cells with flag == value, circularly. A run covering every cell starts at 0.
std::vector<Run> circular_runs(const std::vector<char>& flag, char value) {
    const std::size_t m = flag.size();
    const auto other = std::find_if(flag.begin(), flag.end(), [value](char f) { return f != value; });
    if (other == flag.end()) return {Run{0, m}};
    const std::size_t p = static_cast<std::size_t>(other - flag.begin());
    std::vector<Run> runs;
    bool open = false;
    for (std::size_t k = 1; k <= m; ++k) {
        const std::size_t i = (p + k) % m;
        if (flag[i] != value) {
            open = false;
        } else if (open) {
            ++runs.back().length;
        } else {
            runs.push_back({i, 1});
            open = true;
        }
    }
    return runs;
}

Arc run_arc(const Run& r, int layer) {
    const double w = DyadicPartition::cell_width(layer);
    return {w * static_cast<double>(r.first), w * static_cast<double>(r.length)};
}

// Sorted angles with a second copy shifted by 2pi, plus prefix sums, for window statistics.
class WindowIndex {
public:
    explicit WindowIndex(std::vector<double> sorted) : m_(sorted.size()) {
        u_.reserve(2 * m_);
        for (double a : sorted) u_.push_back(a);
        for (double a : sorted) u_.push_back(a + kTwoPi);
        prefix_.assign(u_.size() + 1, 0.0);
        for (std::size_t i = 0; i < u_.size(); ++i) prefix_[i + 1] = prefix_[i] + u_[i];
    }

    // Offsets of points in [x0 - left, x0 + right) relative to x0, aggregated.
    SufficientStats stats(double x0, double left, double right) const {
        double lo = x0 - left;
        if (lo < 0.0) {
            lo += kTwoPi;
            x0 += kTwoPi;
        }
        const double hi = x0 + right;
        const std::size_t a = lower(lo), b = upper(x0), c = lower(hi);
        SufficientStats s;
        const double nl = static_cast<double>(b - a), nr = static_cast<double>(c - b);
        s.count = nl + nr;
        s.n_right = nr;
        s.sum_tplus = (prefix_[c] - prefix_[b]) - nr * x0;
        s.sum_t = (prefix_[b] - prefix_[a]) - nl * x0 + s.sum_tplus;
        return s;
    }

private:
    std::size_t lower(double v) const {
        return static_cast<std::size_t>(std::lower_bound(u_.begin(), u_.end(), v) - u_.begin());
    }
    std::size_t upper(double v) const {
        return static_cast<std::size_t>(std::upper_bound(u_.begin(), u_.end(), v) - u_.begin());
    }
    std::size_t m_;
    std::vector<double> u_;
    std::vector<double> prefix_;
};

}  // namespace

DetectionReport detect_features(const AngularSample& sample, const DetectionConfig& cfg) {
    if (sample.empty()) throw DomainError("detect_features: empty sample");
    const int L = cfg.max_layer, f0 = cfg.first_layer;
    if (L < 3 || f0 < 2 || f0 > L || L > 20) throw DomainError("detect_features: need 3 <= max_layer, 2 <= first_layer <= max_layer");
    DetectionReport rep;
    rep.max_layer = L;
    rep.first_layer = f0;
    rep.alpha = cfg.alpha;
    const std::size_t n = sample.size();
    const std::size_t cells = DyadicPartition::cell_count(L);
    const std::size_t layers = static_cast<std::size_t>(L - f0 + 1);
    const std::vector<double> weights = layer_weights(layers);
    const double cw = DyadicPartition::cell_width(L);

    // ---- phase 1: support and outliers
    std::vector<std::size_t> half_hist(2 * cells, 0);
    for (double a : sample.angles()) ++half_hist[DyadicPartition::cell_of(L + 1, a)];
    std::vector<std::size_t> cell_counts(cells);
    for (std::size_t c = 0; c < cells; ++c) cell_counts[c] = half_hist[2 * c] + half_hist[2 * c + 1];

    // occupancy p-values of the layer-(l+1) cells, i.e. halves of layer-l cells
    std::vector<std::vector<double>> half_p(layers);
    for (std::size_t li = 0; li < layers; ++li) {
        const int l = f0 + static_cast<int>(li);
        const std::size_t block = std::size_t{1} << (L - l);  // half-finest bins per half-cell
        const std::size_t m = DyadicPartition::cell_count(l + 1);
        half_p[li].resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t cnt = 0;
            for (std::size_t b = 0; b < block; ++b) cnt += half_hist[j * block + b];
            half_p[li][j] = occupancy_pvalue(cnt, n);
        }
    }
    std::vector<double> occ_p(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        PValueProfile prof{c, std::vector<double>(layers)};
        for (std::size_t li = 0; li + 1 < layers; ++li) {
            const int l = f0 + static_cast<int>(li);
            prof.pvals[li] = half_p[li][c >> (L - l - 1)];
        }
        prof.pvals[layers - 1] = std::min(half_p[layers - 1][2 * c], half_p[layers - 1][2 * c + 1]);
        occ_p[c] = aggregate_pvalues(prof, weights);
    }
    rep.phase1_tests = cells;
    std::vector<char> occupied(cells, 0);
    for (std::size_t c : holm(occ_p, cfg.alpha)) occupied[c] = 1;

    const bool any_occupied = std::find(occupied.begin(), occupied.end(), 1) != occupied.end();
    const bool has_exterior = any_occupied && std::find(occupied.begin(), occupied.end(), 0) != occupied.end();
    std::vector<Run> support_runs;
    std::vector<char> removed(n, 0);
    if (!has_exterior) {
        support_runs.push_back({0, cells});
    } else {
        for (const Run& r : circular_runs(occupied, 0)) rep.support_exterior.push_back(run_arc(r, L));
        for (Run r : circular_runs(occupied, 1)) {
            std::size_t pts = 0;
            double min_p = 1.0;
            for (std::size_t k = 0; k < r.length; ++k) {
                pts += cell_counts[(r.first + k) % cells];
                min_p = std::min(min_p, occ_p[(r.first + k) % cells]);
            }
            const Arc arc = run_arc(r, L);
            const bool small = static_cast<double>(pts) <= cfg.outlier_max_fraction * static_cast<double>(n) &&
                               arc.length <= cfg.outlier_max_arc + 1e-12;
            if (small) {
                // tighten to the nonempty cells of the run
                std::size_t lo = r.length, hi = 0;
                for (std::size_t k = 0; k < r.length; ++k)
                    if (cell_counts[(r.first + k) % cells] > 0) {
                        lo = std::min(lo, k);
                        hi = k;
                    }
                if (lo == r.length) continue;  // occupied by aggregation but empty: nothing to remove
                Feature ft;
                ft.kind = FeatureKind::Outlier;
                ft.first_cell = (r.first + lo) % cells;
                ft.cell_count = hi - lo + 1;
                ft.interval = {cw * static_cast<double>(ft.first_cell), cw * static_cast<double>(ft.cell_count)};
                ft.aggregated_p = min_p;
                ft.alpha = cfg.alpha;
                ft.location = ft.interval.midpoint();
                rep.features.push_back(ft);
                for (std::size_t i = 0; i < n; ++i)
                    if (ft.interval.contains(sample[i])) removed[i] = 1;
                continue;
            }
            support_runs.push_back(r);
            const std::size_t last = (r.first + r.length - 1) % cells;
            Feature lo_f;
            lo_f.kind = FeatureKind::SupportBoundary;
            lo_f.first_cell = r.first;
            lo_f.interval = DyadicPartition::cell(L, r.first);
            lo_f.aggregated_p = occ_p[r.first];
            lo_f.alpha = cfg.alpha;
            lo_f.location = arc.start;
            Feature hi_f = lo_f;
            hi_f.first_cell = last;
            hi_f.interval = DyadicPartition::cell(L, last);
            hi_f.aggregated_p = occ_p[last];
            hi_f.location = arc.end();
            rep.features.push_back(lo_f);
            if (r.length > 1 || !(hi_f.interval == lo_f.interval)) rep.features.push_back(hi_f);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (removed[i]) rep.removed_points.push_back(i);

    if (!cfg.run_phase2) return rep;

    // ---- phase 2: jumps and edges on the retained data
    std::vector<double> kept;
    for (std::size_t i = 0; i < n; ++i)
        if (!removed[i]) kept.push_back(sample[i]);
    std::sort(kept.begin(), kept.end());
    if (kept.size() < cfg.min_lrt_points) return rep;
    const WindowIndex index(kept);

    struct Candidate {
        std::size_t boundary;  // finest-cell boundary id: location = cw * boundary
        std::size_t run;
        double p;
        double jump_evidence;
        double kink_evidence;
    };
    std::vector<Candidate> cands;
    for (std::size_t ri = 0; ri < support_runs.size(); ++ri) {
        const Run& r = support_runs[ri];
        const bool full = r.length == cells;
        // interior boundary points of the run
        const std::size_t first_k = full ? 0 : 1;
        for (std::size_t k = first_k; k < r.length; ++k) {
            const std::size_t b = (r.first + k) % cells;
            const double x0 = cw * static_cast<double>(b);
            const double room_left = full ? kPi : cw * static_cast<double>(k);
            const double room_right = full ? kPi : cw * static_cast<double>(r.length - k);
            // a window is one layer-l cell centred on the boundary point; layers whose window
            // does not fit inside the run are left out of the profile
            PValueProfile prof{b, {}};
            std::vector<LocalTestResult> tested;
            for (std::size_t li = 0; li < layers; ++li) {
                const int l = f0 + static_cast<int>(li);
                const double half = 0.5 * DyadicPartition::cell_width(l);
                const double left = std::min(half, room_left), right = std::min(half, room_right);
                if (left < cw * (1 - 1e-9) || right < cw * (1 - 1e-9)) continue;
                const SufficientStats st = index.stats(x0, left, right);
                const Arc win{wrap_angle(x0 - left), left + right};
                try {
                    tested.push_back(discontinuity_edge_test(st, x0, win, cfg.alpha, cfg.min_lrt_points));
                } catch (const std::exception& e) {
                    throw EstimationError("detect", "local test at boundary cell " + std::to_string(b) +
                                                        ", layer " + std::to_string(l) + ": " + e.what());
                }
                prof.pvals.push_back(tested.back().p_value);
            }
            if (tested.empty()) continue;
            const std::vector<double> w = layer_weights(tested.size());
            double jump_ev = 0.0, kink_ev = 0.0;
            for (std::size_t q = 0; q < tested.size(); ++q) {
                const double ev = -w[q] * std::log(std::max(tested[q].p_value, 1e-300));
                if (tested[q].kind == LocalKind::Discontinuity) jump_ev += ev;
                if (tested[q].kind == LocalKind::Edge) kink_ev += ev;
            }
            const double agg = aggregate_pvalues(prof, w);
            cands.push_back({b, ri, agg, jump_ev, kink_ev});
        }
    }
    rep.phase2_tests = cands.size();
    if (cands.empty()) return rep;
    std::vector<double> ps(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) ps[i] = cands[i].p;
    const std::vector<std::size_t> rej = holm(ps, cfg.alpha);
    std::vector<char> is_rej(cands.size(), 0);
    for (std::size_t i : rej) is_rej[i] = 1;

    // merge rejected candidates at consecutive boundary points of the same run; a run covering
    // the whole circle is walked from a non-rejected point so a feature straddling 0 stays whole
    std::size_t shift = 0;
    if (support_runs.size() == 1 && support_runs[0].length == cells) {
        const auto it = std::find(is_rej.begin(), is_rej.end(), 0);
        if (it == is_rej.end()) return rep;  // every location rejected: no localized feature
        shift = static_cast<std::size_t>(it - is_rej.begin());
    }
    const std::size_t nc = cands.size();
    auto at = [&](std::size_t k) -> std::size_t { return (k + shift) % nc; };
    std::size_t k = 0;
    while (k < nc) {
        if (!is_rej[at(k)]) {
            ++k;
            continue;
        }
        std::size_t e = k;
        while (e + 1 < nc && is_rej[at(e + 1)] && cands[at(e + 1)].run == cands[at(k)].run &&
               cands[at(e + 1)].boundary == (cands[at(e)].boundary + 1) % cells)
            ++e;
        std::size_t best = at(k);
        for (std::size_t q = k; q <= e; ++q)
            if (cands[at(q)].p < cands[best].p) best = at(q);
        Feature ft;
        const double jump = cands[best].jump_evidence, kink = cands[best].kink_evidence;
        ft.kind = jump >= kink && jump > 0.0 ? FeatureKind::Discontinuity : FeatureKind::Edge;
        ft.first_cell = (cands[at(k)].boundary + cells - 1) % cells;
        ft.cell_count = e - k + 2;
        ft.interval = {cw * static_cast<double>(ft.first_cell), cw * static_cast<double>(ft.cell_count)};
        ft.aggregated_p = cands[best].p;
        ft.alpha = cfg.alpha;
        ft.location = ft.interval.midpoint();
        rep.features.push_back(ft);
        k = e + 1;
    }
    return rep;
}

}  // namespace circspline
