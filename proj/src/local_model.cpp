#include "circspline/local_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "circspline/errors.hpp"
#include "circspline/partition_unity.hpp"

namespace circspline {

namespace {
constexpr double kBox = 50.0;
constexpr double kGradTol = 1e-8;
constexpr int kMaxIter = 500;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// E[u]/L for u on [0, L] with density proportional to exp(s u / L)
double trunc_exp_mean(double s) {
    if (std::abs(s) < 0.5) {
        const double s2 = s * s;
        return 0.5 + s * (1.0 / 12 - s2 * (1.0 / 720 - s2 * (1.0 / 30240 - s2 / 1209600)));
    }
    return 0.5 + 0.5 / std::tanh(0.5 * s) - 1.0 / s;
}

// Var[u]/L^2 for the same law
double trunc_exp_var(double s) {
    if (std::abs(s) < 0.5) {
        const double s2 = s * s;
        return 1.0 / 12 - s2 * (1.0 / 240 - s2 * (1.0 / 6048 - s2 * (1.0 / 172800 - s2 / 5322240)));
    }
    const double sh = std::sinh(0.5 * s);
    return 1.0 / (s * s) - 1.0 / (4.0 * sh * sh);
}

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct Pieces {
    double log_left = kNegInf, log_right = kNegInf, log_a = kNegInf;
};

Pieces pieces(const ExpFamilyParams& p) {
    const double la = p.left_length(), lb = p.right_length();
    Pieces out;
    if (la > 0.0) out.log_left = std::log(la) + log_expm1_over(-p.beta0 * la);
    if (lb > 0.0) out.log_right = p.beta1 + std::log(lb) + log_expm1_over((p.beta0 + p.beta2) * lb);
    out.log_a = log_add(out.log_left, out.log_right);
    return out;
}

std::array<int, 3> free_mask(Constraint c) {
    switch (c) {
        case Constraint::NoJump: return {1, 0, 1};
        case Constraint::NoKink: return {1, 1, 0};
        default: return {1, 1, 1};
    }
}

void set_beta(ExpFamilyParams& p, const Eigen::Vector3d& b) {
    p.beta0 = b[0];
    p.beta1 = b[1];
    p.beta2 = b[2];
}

double mean_objective(const ExpFamilyParams& p, const SufficientStats& s) {
    return (p.beta0 * s.sum_t + p.beta1 * s.n_right + p.beta2 * s.sum_tplus) / s.count -
           normalizer(p).log_value;
}
}  // namespace

double ExpFamilyParams::left_length() const { return interval.offset(x0); }
double ExpFamilyParams::right_length() const { return interval.length - interval.offset(x0); }

double log_expm1_over(double s) {
    if (std::abs(s) < 1e-5) return s * (0.5 + s / 24.0);
    if (s > 0.0) return s + std::log(-std::expm1(-s)) - std::log(s);
    return std::log(-std::expm1(s)) - std::log(-s);
}

NormalizingConstant normalizer(const ExpFamilyParams& p) {
    if (!std::isfinite(p.beta0) || !std::isfinite(p.beta1) || !std::isfinite(p.beta2))
        throw DomainError("normalizer: non-finite parameters");
    NormalizingConstant nc;
    nc.log_value = pieces(p).log_a;
    nc.value = std::exp(nc.log_value);
    // closed form: error is a few ulps of each piece
    nc.quadrature_error = 16.0 * std::numeric_limits<double>::epsilon() * nc.value;
    return nc;
}

double exp_density(const ExpFamilyParams& p, double x) {
    if (!p.interval.contains(x)) throw DomainError("exp_density: x outside the model interval");
    const double t = p.interval.offset(x) - p.left_length();
    const double expo = p.beta0 * t + (t > 0.0 ? p.beta1 + p.beta2 * t : 0.0);
    return std::exp(expo - normalizer(p).log_value);
}

ModelMoments model_moments(const ExpFamilyParams& p) {
    const Pieces pc = pieces(p);
    const double la = p.left_length(), lb = p.right_length();
    const double wl = pc.log_left == kNegInf ? 0.0 : std::exp(pc.log_left - pc.log_a);
    const double wr = pc.log_right == kNegInf ? 0.0 : std::exp(pc.log_right - pc.log_a);
    double ml = 0.0, vl = 0.0, mr = 0.0, vr = 0.0;
    if (la > 0.0) {
        ml = -la * trunc_exp_mean(-p.beta0 * la);
        vl = la * la * trunc_exp_var(-p.beta0 * la);
    }
    if (lb > 0.0) {
        const double s = (p.beta0 + p.beta2) * lb;
        mr = lb * trunc_exp_mean(s);
        vr = lb * lb * trunc_exp_var(s);
    }
    ModelMoments m;
    m.mean[0] = wl * ml + wr * mr;
    m.mean[1] = wr;
    m.mean[2] = wr * mr;
    const double e_tt = wl * (vl + ml * ml) + wr * (vr + mr * mr);
    const double e_rr = wr * (vr + mr * mr);
    // second moments of (t, I, t_+); on the right piece t = t_+
    const double second[3][3] = {{e_tt, wr * mr, e_rr}, {wr * mr, wr, wr * mr}, {e_rr, wr * mr, e_rr}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m.cov[i][j] = second[i][j] - m.mean[i] * m.mean[j];
    return m;
}

std::vector<double> local_offsets(std::span<const double> angles, double x0, const Arc& interval) {
    const double left = interval.offset(x0);
    std::vector<double> t;
    for (double a : angles)
        if (interval.contains(a)) t.push_back(interval.offset(a) - left);
    return t;
}

SufficientStats sufficient_stats(std::span<const double> offsets) {
    SufficientStats s;
    for (double t : offsets) {
        s.count += 1.0;
        s.sum_t += t;
        if (t > 0.0) {
            s.n_right += 1.0;
            s.sum_tplus += t;
        }
    }
    return s;
}

double log_likelihood(const ExpFamilyParams& p, const SufficientStats& s) {
    return p.beta0 * s.sum_t + p.beta1 * s.n_right + p.beta2 * s.sum_tplus -
           s.count * normalizer(p).log_value;
}

void log_likelihood_gradient(const ExpFamilyParams& p, const SufficientStats& s, double out[3]) {
    const ModelMoments m = model_moments(p);
    out[0] = s.sum_t - s.count * m.mean[0];
    out[1] = s.n_right - s.count * m.mean[1];
    out[2] = s.sum_tplus - s.count * m.mean[2];
}

ExpFamilyParams fit_mle(const SufficientStats& s, double x0, const Arc& interval, Constraint constraint) {
    ExpFamilyParams p;
    p.x0 = wrap_angle(x0);
    p.interval = interval;
    if (!interval.contains(p.x0)) throw DomainError("fit_mle: x0 outside the interval");
    if (s.count < 3.0) {
        p.degenerate = true;
        p.log_likelihood = log_likelihood(p, s);
        return p;
    }
    auto mask = free_mask(constraint);
    const Eigen::Vector3d sbar(s.sum_t / s.count, s.n_right / s.count, s.sum_tplus / s.count);
    Eigen::Vector3d beta = Eigen::Vector3d::Zero();
    // All points on one side of x0: the jump has no finite MLE. Pin it at the box and fit the
    // slope of the occupied side only; the empty side's slope is unidentified and stays 0.
    bool separated = false;
    if (mask[1] && p.left_length() > 0.0 && p.right_length() > 0.0 &&
        (s.n_right == 0.0 || s.n_right == s.count)) {
        separated = true;
        const bool right = s.n_right == s.count;
        beta[1] = right ? kBox : -kBox;
        mask[1] = 0;
        mask[right ? 0 : 2] = 0;
        set_beta(p, beta);
    }
    double obj = mean_objective(p, s);
    int it = 0;
    for (; it < kMaxIter; ++it) {
        const ModelMoments m = model_moments(p);
        Eigen::Vector3d grad;
        for (int i = 0; i < 3; ++i) grad[i] = mask[i] ? sbar[i] - m.mean[i] : 0.0;
        // coordinates pinned at the box with the gradient pushing outward stay fixed
        std::array<int, 3> active = mask;
        for (int i = 0; i < 3; ++i)
            if (active[i] && ((beta[i] >= kBox && grad[i] > 0) || (beta[i] <= -kBox && grad[i] < 0))) {
                active[i] = 0;
                grad[i] = 0.0;
            }
        if (grad.cwiseAbs().maxCoeff() < kGradTol) break;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (active[i] && active[j]) cov(i, j) = m.cov[i][j];
        Eigen::Vector3d dir = cov.ldlt().solve(grad);
        if (!dir.allFinite() || dir.dot(grad) <= 0.0) dir = grad;
        double step = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::Vector3d trial = (beta + step * dir).cwiseMax(-kBox).cwiseMin(kBox);
            ExpFamilyParams q = p;
            set_beta(q, trial);
            const double o = mean_objective(q, s);
            if (o >= obj + 1e-4 * step * dir.dot(grad) || (o >= obj && step < 1e-8)) {
                beta = trial;
                p = q;
                obj = o;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    p.iterations = it;
    p.diverged = separated;
    for (int i = 0; i < 3; ++i)
        if (std::abs(beta[i]) >= kBox) p.diverged = true;
    p.log_likelihood = log_likelihood(p, s);
    return p;
}

ExpFamilyParams fit_mle(std::span<const double> angles, double x0, const Arc& interval,
                        Constraint constraint) {
    const auto t = local_offsets(angles, wrap_angle(x0), interval);
    return fit_mle(sufficient_stats(t), x0, interval, constraint);
}

WeightedFit fit_mle_weighted(std::span<const double> angles, const BumpFunction& bump, double x0,
                             const Arc& interval) {
    WeightedFit out;
    out.params = fit_mle(angles, x0, interval);
    out.objective_plain = out.params.log_likelihood;
    double log_rho = 0.0;
    for (double a : angles) {
        if (!interval.contains(a)) continue;
        const double r = bump_eval(bump, a);
        log_rho += r > 0.0 ? std::log(r) : kNegInf;
    }
    out.objective_weighted = out.objective_plain + log_rho;
    return out;
}

}  // namespace circspline
