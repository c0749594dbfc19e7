#pragma once

#include <span>
#include <vector>

#include "circspline/arc.hpp"
#include "circspline/circle_core.hpp"

namespace circspline {

/// Density on an arc U proportional to exp(b0 t + b1 I(t > 0) + b2 t_+), where t is the signed
/// offset of x from x0 along the arc.
struct ExpFamilyParams {
    double beta0 = 0.0, beta1 = 0.0, beta2 = 0.0;
    double x0 = 0.0;
    Arc interval;
    bool diverged = false;    // a coordinate hit the [-50, 50] box
    bool degenerate = false;  // fewer than 3 points; uniform returned
    int iterations = 0;
    double log_likelihood = 0.0;

    /// Left and right lengths of the interval measured from x0.
    double left_length() const;
    double right_length() const;
};

struct NormalizingConstant {
    double value = 0.0;
    double log_value = 0.0;
    double quadrature_error = 0.0;
};

struct SufficientStats {
    double count = 0.0;
    double sum_t = 0.0;
    double n_right = 0.0;
    double sum_tplus = 0.0;
};

/// Moments of (t, I(t>0), t_+) under the model.
struct ModelMoments {
    double mean[3] = {0, 0, 0};
    double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

enum class Constraint { None, NoJump, NoKink };

/// log((e^s - 1)/s), stable for all s.
double log_expm1_over(double s);

NormalizingConstant normalizer(const ExpFamilyParams& p);
double exp_density(const ExpFamilyParams& p, double x);
ModelMoments model_moments(const ExpFamilyParams& p);

/// Offsets t of the points lying in the interval, relative to x0.
std::vector<double> local_offsets(std::span<const double> angles, double x0, const Arc& interval);
SufficientStats sufficient_stats(std::span<const double> offsets);

double log_likelihood(const ExpFamilyParams& p, const SufficientStats& s);
/// Gradient of the log-likelihood with respect to (b0, b1, b2).
void log_likelihood_gradient(const ExpFamilyParams& p, const SufficientStats& s, double out[3]);

ExpFamilyParams fit_mle(const SufficientStats& s, double x0, const Arc& interval,
                        Constraint constraint = Constraint::None);
ExpFamilyParams fit_mle(std::span<const double> angles, double x0, const Arc& interval,
                        Constraint constraint = Constraint::None);

struct BumpFunction;

struct WeightedFit {
    ExpFamilyParams params;
    double objective_plain = 0.0;     // log-likelihood
    double objective_weighted = 0.0;  // log-likelihood + sum log rho(x_j)
};

/// Maximizer of prod rho(x_j) g(x_j | beta): the bump factor does not depend on beta, so the
/// argmax is the plain MLE; both objective values are reported.
WeightedFit fit_mle_weighted(std::span<const double> angles, const BumpFunction& bump, double x0,
                             const Arc& interval);

}  // namespace circspline
