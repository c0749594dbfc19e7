#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "circspline/circle_core.hpp"
#include "circspline/kde.hpp"
#include "circspline/local_model.hpp"
#include "circspline/pipeline.hpp"

namespace circspline {

enum class ScenarioKind { EpsMixture, WrappedBimodal, UnifTriangular, PiecewiseUniform, Uniform };

struct Atom {
    double location;
    double mass;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::Uniform;
    double eps = 0.0;     // eps_mixture: atom mass
    double sigma = 0.5;   // eps_mixture: normal sd; wrapped_bimodal: component sd
    double theta = 0.0;   // wrapped_bimodal: modes at +-theta

    static Scenario eps_mixture(double eps, double sigma = 0.5);
    static Scenario wrapped_bimodal(double theta, double sigma = 0.4);
    static Scenario unif_triangular();
    static Scenario piecewise_uniform();
    static Scenario uniform();
    /// Parse "eps_mixture", "wrapped_bimodal", "unif_triangular", "piecewise_uniform", "uniform".
    static Scenario from_name(const std::string& name);

    std::string name() const;
    /// Density (arc-length units) of the absolutely continuous part, including its (1 - eps) share.
    double density(double x) const;
    std::vector<Atom> atoms() const;
    /// Points where the density jumps or has a kink.
    std::vector<double> feature_locations() const;
    /// Fourier coefficients E[exp(i k X)] of the full law (atoms included), k = 0..K.
    FourierCoefficients fourier(int max_order) const;
    void validate() const;
};

/// splitmix64 step, used to derive independent replicate seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate);

AngularSample sample_scenario(const Scenario& s, std::size_t n, std::uint64_t seed);

/// Draws from the local exponential model on its interval by inverse CDF on each side of x0.
AngularSample sample_local_model(const ExpFamilyParams& p, std::size_t n, std::uint64_t seed);

/// Maps a sample to density values (arc-length units) on the given grid.
using Estimator = std::function<std::vector<double>(const AngularSample&, std::span<const double>)>;

Estimator pipeline_estimator(PipelineConfig cfg = {});
Estimator spline_estimator(const LambdaGrid& grid = LambdaGrid::log_spaced());
Estimator kde_plugin_estimator(KernelKind kind = KernelKind::Epanechnikov);
Estimator kde_cv_estimator(KernelKind kind = KernelKind::Epanechnikov,
                           std::vector<double> grid = default_bandwidth_grid());
Estimator cos2_plugin_estimator();
Estimator oracle_estimator(const Scenario& s);
Estimator constant_estimator();

struct IseOptions {
    int grid_points = 4096;
    double atom_exclusion = 0.05;    // half-width of the arcs around atoms left out of the ISE
    double feature_window = kPi / 16;  // half-width for per-feature ISE
};

/// Integrated squared error against the continuous part, atoms' neighbourhoods excluded.
double integrated_squared_error(const Scenario& s, std::span<const double> grid,
                                std::span<const double> values, const IseOptions& opt = {});

struct MiseReport {
    std::string method;
    Scenario scenario;
    std::size_t n = 0;
    std::size_t replicates = 0;
    std::size_t failures = 0;
    double mise_mean = 0.0;
    double mise_mc_stderr = 0.0;
    std::map<std::string, double> per_feature_mise;
    std::vector<double> ise;  // per successful replicate
};

/// Monte Carlo MISE; a replicate whose estimator throws is dropped and counted.
MiseReport mise(const std::string& method, const Estimator& est, const Scenario& s, std::size_t n,
                std::size_t replicates, std::uint64_t seed, const IseOptions& opt = {});

struct Table1Row {
    std::size_t n;
    double eps;
    double mise;
    double mise_stderr;
    double percent_increase;
};
std::vector<Table1Row> table1_percent_increase(const std::vector<double>& eps_list,
                                               const std::vector<std::size_t>& n_list, std::size_t R,
                                               std::uint64_t seed, double sigma = 1.0);

struct Table2Row {
    double theta;
    double mse_spline;
    double mse_cos2;
    double mse_kde_cv;
    double mse_kde_plugin;
};
std::vector<Table2Row> table2_compare(const std::vector<double>& theta_grid, std::size_t n,
                                      std::size_t R, std::uint64_t seed, double spread = 0.4);

/// Runs body(r) for r in [0, count) on up to hardware_concurrency threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace circspline
