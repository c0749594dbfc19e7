#include "circspline/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "circspline/errors.hpp"
#include "circspline/kde.hpp"

namespace circspline {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// signed representative in [-pi, pi)
double centered(double x) { return signed_displacement(0.0, x); }
}  // namespace

Scenario Scenario::eps_mixture(double eps, double sigma) {
    Scenario s{ScenarioKind::EpsMixture, eps, sigma, 0.0};
    s.validate();
    return s;
}
Scenario Scenario::wrapped_bimodal(double theta, double sigma) {
    Scenario s{ScenarioKind::WrappedBimodal, 0.0, sigma, theta};
    s.validate();
    return s;
}
Scenario Scenario::unif_triangular() { return {ScenarioKind::UnifTriangular, 0.0, 0.0, 0.0}; }
Scenario Scenario::piecewise_uniform() { return {ScenarioKind::PiecewiseUniform, 0.0, 0.0, 0.0}; }
Scenario Scenario::uniform() { return {ScenarioKind::Uniform, 0.0, 0.0, 0.0}; }

Scenario Scenario::from_name(const std::string& name) {
    if (name == "eps_mixture") return eps_mixture(0.05);
    if (name == "wrapped_bimodal") return wrapped_bimodal(0.5);
    if (name == "unif_triangular") return unif_triangular();
    if (name == "piecewise_uniform") return piecewise_uniform();
    if (name == "uniform") return uniform();
    throw DomainError("unknown scenario: " + name);
}

std::string Scenario::name() const {
    switch (kind) {
        case ScenarioKind::EpsMixture: return "eps_mixture";
        case ScenarioKind::WrappedBimodal: return "wrapped_bimodal";
        case ScenarioKind::UnifTriangular: return "unif_triangular";
        case ScenarioKind::PiecewiseUniform: return "piecewise_uniform";
        case ScenarioKind::Uniform: return "uniform";
    }
    return "unknown";
}

void Scenario::validate() const {
    if (kind == ScenarioKind::EpsMixture && !(eps >= 0.0 && eps <= 1.0 && sigma > 0.0))
        throw DomainError("eps_mixture: need eps in [0,1] and sigma > 0");
    if (kind == ScenarioKind::WrappedBimodal && !(theta >= 0.0 && theta < kPi / 2 && sigma > 0.0))
        throw DomainError("wrapped_bimodal: need theta in [0, pi/2) and sigma > 0");
}

double Scenario::density(double x) const {
    const double s = centered(x);
    switch (kind) {
        case ScenarioKind::Uniform: return 1.0 / kTwoPi;
        case ScenarioKind::EpsMixture: {
            if (s < -kPi / 2 || s >= kPi / 2) return 0.0;
            const double z = normal_cdf(kPi / (2 * sigma)) - normal_cdf(-kPi / (2 * sigma));
            return (1.0 - eps) * normal_pdf(s / sigma) / (sigma * z);
        }
        case ScenarioKind::WrappedBimodal: {
            double acc = 0.0;
            const int reach = static_cast<int>(std::ceil(10.0 * sigma / kTwoPi)) + 1;
            for (int j = -reach; j <= reach; ++j)
                acc += normal_pdf((s - theta + kTwoPi * j) / sigma) + normal_pdf((s + theta + kTwoPi * j) / sigma);
            return 0.5 * acc / sigma;
        }
        case ScenarioKind::UnifTriangular: {
            if (s >= -3 * kPi / 4 && s < -kPi / 4) return 1.0 / kPi;
            if (s >= kPi / 4 && s < kPi / 2) return (2.0 / kPi) * (s - kPi / 4) / (kPi / 4);
            if (s >= kPi / 2 && s < 3 * kPi / 4) return (2.0 / kPi) * (3 * kPi / 4 - s) / (kPi / 4);
            return 0.0;
        }
        case ScenarioKind::PiecewiseUniform: {
            if (s >= -kPi / 2 && s < -kPi / 4) return 1.0 / kPi;
            if (s >= -kPi / 4 && s < kPi / 4) return 1.0 / kTwoPi;
            if (s >= kPi / 4 && s < kPi / 2) return 2.0 / kPi;
            return 0.0;
        }
    }
    return 0.0;
}

std::vector<Atom> Scenario::atoms() const {
    if (kind != ScenarioKind::EpsMixture || eps == 0.0) return {};
    return {{wrap_angle(3 * kPi / 4), eps / 2}, {wrap_angle(-3 * kPi / 4), eps / 2}};
}

std::vector<double> Scenario::feature_locations() const {
    std::vector<double> v;
    switch (kind) {
        case ScenarioKind::EpsMixture: v = {-kPi / 2, kPi / 2, 3 * kPi / 4, -3 * kPi / 4}; break;
        case ScenarioKind::UnifTriangular: v = {-3 * kPi / 4, -kPi / 4, kPi / 4, kPi / 2, 3 * kPi / 4}; break;
        case ScenarioKind::PiecewiseUniform: v = {-kPi / 2, -kPi / 4, kPi / 4, kPi / 2}; break;
        default: break;
    }
    for (double& x : v) x = wrap_angle(x);
    return v;
}

FourierCoefficients Scenario::fourier(int max_order) const {
    FourierCoefficients u(max_order);
    if (kind == ScenarioKind::Uniform) return u;
    if (kind == ScenarioKind::WrappedBimodal) {
        for (int k = 1; k <= max_order; ++k)
            u.set(k, std::exp(-0.5 * sigma * sigma * k * k) * std::cos(k * theta));
        return u;
    }
    // piecewise smooth: integrate each smooth piece separately
    std::vector<double> br;
    switch (kind) {
        case ScenarioKind::EpsMixture: br = {-kPi / 2, 0.0, kPi / 2}; break;
        case ScenarioKind::UnifTriangular: br = {-3 * kPi / 4, -kPi / 4, kPi / 4, kPi / 2, 3 * kPi / 4}; break;
        default: br = {-kPi / 2, -kPi / 4, kPi / 4, kPi / 2}; break;
    }
    // 1e-15 is below what the Kronrod error estimate can certify and forces full-depth recursion
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (int k = 1; k <= max_order; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i + 1 < br.size(); ++i) {
            const double a = br[i], b = br[i + 1];
            // evaluate just inside the piece to respect the half-open conventions
            auto f = [&](double s) { return density(std::clamp(s, a + 1e-15, b - 1e-15)); };
            re += GK::integrate([&](double s) { return f(s) * std::cos(k * s); }, a, b, 12, 1e-12);
            im += GK::integrate([&](double s) { return f(s) * std::sin(k * s); }, a, b, 12, 1e-12);
        }
        cplx v(re, im);
        for (const Atom& at : atoms()) v += at.mass * std::polar(1.0, k * at.location);
        u.set(k, v);
    }
    return u;
}

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) {
    return mix_seed(mix_seed(master) ^ mix_seed(replicate + 0x632be59bd9b4e019ULL));
}

namespace {
// u on [0, L] with density proportional to exp(s u)
double truncated_exp_draw(double s, double L, double U) {
    if (std::abs(s * L) < 1e-12) return U * L;
    if (s > 0.0) return L + std::log(U + (1.0 - U) * std::exp(-s * L)) / s;
    return std::log1p(U * std::expm1(s * L)) / s;
}
}  // namespace

AngularSample sample_local_model(const ExpFamilyParams& p, std::size_t n, std::uint64_t seed) {
    const double la = p.left_length(), lb = p.right_length();
    const double log_a = normalizer(p).log_value;
    const double wl = la > 0.0 ? std::exp(std::log(la) + log_expm1_over(-p.beta0 * la) - log_a) : 0.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& x : out) {
        const double side = unif(rng), U = unif(rng);
        double t;
        if (side < wl)
            t = -la + truncated_exp_draw(p.beta0, la, U);  // left piece: exp(b0 t), t in [-la, 0]
        else
            t = truncated_exp_draw(p.beta0 + p.beta2, lb, U);
        x = wrap_angle(p.x0 + t);
    }
    return AngularSample(std::move(out));
}

AngularSample sample_scenario(const Scenario& s, std::size_t n, std::uint64_t seed) {
    s.validate();
    if (n < 1) throw DomainError("sample_scenario: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = 0.0;
        switch (s.kind) {
            case ScenarioKind::Uniform: x = kTwoPi * unif(rng); break;
            case ScenarioKind::EpsMixture: {
                if (unif(rng) < s.eps) {
                    x = unif(rng) < 0.5 ? 3 * kPi / 4 : -3 * kPi / 4;
                } else {
                    do {
                        x = s.sigma * normal(rng);
                    } while (x < -kPi / 2 || x >= kPi / 2);
                }
                break;
            }
            case ScenarioKind::WrappedBimodal:
                x = (unif(rng) < 0.5 ? s.theta : -s.theta) + s.sigma * normal(rng);
                break;
            case ScenarioKind::UnifTriangular: {
                const double u = unif(rng);
                if (unif(rng) < 0.5) {
                    x = -3 * kPi / 4 + (kPi / 2) * u;
                } else {
                    const double a = kPi / 4, b = 3 * kPi / 4, w = b - a;
                    x = u < 0.5 ? a + w * std::sqrt(u / 2) : b - w * std::sqrt((1 - u) / 2);
                }
                break;
            }
            case ScenarioKind::PiecewiseUniform: {
                const double piece = unif(rng), u = unif(rng);
                if (piece < 0.25)
                    x = -kPi / 2 + (kPi / 4) * u;
                else if (piece < 0.5)
                    x = -kPi / 4 + (kPi / 2) * u;
                else
                    x = kPi / 4 + (kPi / 4) * u;
                break;
            }
        }
        out.push_back(x);
    }
    return AngularSample(std::move(out));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

Estimator pipeline_estimator(PipelineConfig cfg) {
    return [cfg](const AngularSample& s, std::span<const double> grid) {
        const PipelineResult r = estimate(s, cfg);
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = r.estimate.evaluate(grid[i]);
        return v;
    };
}

Estimator spline_estimator(const LambdaGrid& grid) {
    return [grid](const AngularSample& s, std::span<const double> xs) {
        const int K = default_order(s.size());
        const FourierCoefficients u = empirical_fourier(s, K);
        const LambdaSelection sel = select_lambda(u, s.size(), grid);
        std::vector<double> v = fit_spline_density(u, s.size(), sel.lambda).evaluate(xs);
        for (double& x : v) x /= kTwoPi;
        return v;
    };
}

Estimator kde_plugin_estimator(KernelKind kind) {
    return [kind](const AngularSample& s, std::span<const double> xs) {
        const BandwidthChoice b = bandwidth_plugin(s, kind);
        return kde_grid(s, KernelSpec{kind, b.h}, xs);
    };
}

Estimator kde_cv_estimator(KernelKind kind, std::vector<double> grid) {
    return [kind, grid](const AngularSample& s, std::span<const double> xs) {
        const BandwidthChoice b = bandwidth_cv(s, kind, grid);
        return kde_grid(s, KernelSpec{kind, b.h}, xs);
    };
}

Estimator cos2_plugin_estimator() {
    return [](const AngularSample& s, std::span<const double> xs) {
        const BandwidthChoice b = bandwidth_plugin(s, KernelKind::Cos2);
        return kde_grid(s, KernelSpec::cos2(cos2_order_for_bandwidth(b.h)), xs);
    };
}

Estimator oracle_estimator(const Scenario& sc) {
    return [sc](const AngularSample&, std::span<const double> xs) {
        std::vector<double> v(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) v[i] = sc.density(xs[i]);
        return v;
    };
}

Estimator constant_estimator() {
    return [](const AngularSample&, std::span<const double> xs) {
        return std::vector<double>(xs.size(), 1.0 / kTwoPi);
    };
}

namespace {
std::vector<double> ise_grid(int points) {
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[i] = kTwoPi * i / points;
    return g;
}

bool excluded(const Scenario& s, double x, double half_width) {
    for (const Atom& a : s.atoms())
        if (circular_distance(a.location, x) < half_width) return true;
    return false;
}
}  // namespace

double integrated_squared_error(const Scenario& s, std::span<const double> grid,
                                std::span<const double> values, const IseOptions& opt) {
    if (grid.size() != values.size()) throw DomainError("ISE: grid/value size mismatch");
    const double dx = kTwoPi / static_cast<double>(grid.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (excluded(s, grid[i], opt.atom_exclusion)) continue;
        const double d = values[i] - s.density(grid[i]);
        acc += d * d;
    }
    return acc * dx;
}

MiseReport mise(const std::string& method, const Estimator& est, const Scenario& s, std::size_t n,
                std::size_t replicates, std::uint64_t seed, const IseOptions& opt) {
    if (replicates < 2) throw DomainError("mise: need at least 2 replicates");
    const std::vector<double> grid = ise_grid(opt.grid_points);
    const double dx = kTwoPi / static_cast<double>(grid.size());
    const std::vector<double> feats = s.feature_locations();
    std::vector<double> ise(replicates, 0.0);
    std::vector<std::vector<double>> local(replicates, std::vector<double>(feats.size(), 0.0));
    std::vector<char> ok(replicates, 0);
    parallel_for(replicates, [&](std::size_t r) {
        try {
            const AngularSample sample = sample_scenario(s, n, replicate_seed(seed, r));
            const std::vector<double> v = est(sample, grid);
            ise[r] = integrated_squared_error(s, grid, v, opt);
            for (std::size_t f = 0; f < feats.size(); ++f) {
                double acc = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    if (circular_distance(grid[i], feats[f]) > opt.feature_window) continue;
                    if (excluded(s, grid[i], opt.atom_exclusion)) continue;
                    const double d = v[i] - s.density(grid[i]);
                    acc += d * d * dx;
                }
                local[r][f] = acc;
            }
            ok[r] = 1;
        } catch (const std::exception&) {
            ok[r] = 0;
        }
    });
    MiseReport rep;
    rep.method = method;
    rep.scenario = s;
    rep.n = n;
    rep.replicates = replicates;
    std::vector<double> feat_sum(feats.size(), 0.0);
    for (std::size_t r = 0; r < replicates; ++r) {
        if (!ok[r]) {
            ++rep.failures;
            continue;
        }
        rep.ise.push_back(ise[r]);
        for (std::size_t f = 0; f < feats.size(); ++f) feat_sum[f] += local[r][f];
    }
    if (static_cast<double>(rep.failures) > 0.05 * static_cast<double>(replicates))
        throw EstimationError("harness", method + ": " + std::to_string(rep.failures) + " of " +
                                             std::to_string(replicates) + " replicates failed");
    const double m = static_cast<double>(rep.ise.size());
    double sum = 0.0, sq = 0.0;
    for (double v : rep.ise) sum += v;
    rep.mise_mean = sum / m;
    for (double v : rep.ise) sq += (v - rep.mise_mean) * (v - rep.mise_mean);
    rep.mise_mc_stderr = m > 1 ? std::sqrt(sq / (m - 1) / m) : 0.0;
    for (std::size_t f = 0; f < feats.size(); ++f) {
        char key[32];
        std::snprintf(key, sizeof key, "%.6f", feats[f]);
        rep.per_feature_mise[key] = feat_sum[f] / m;
    }
    return rep;
}

std::vector<Table1Row> table1_percent_increase(const std::vector<double>& eps_list,
                                               const std::vector<std::size_t>& n_list, std::size_t R,
                                               std::uint64_t seed, double sigma) {
    std::vector<Table1Row> rows;
    const Estimator kde = kde_plugin_estimator(KernelKind::Epanechnikov);
    for (std::size_t n : n_list) {
        const MiseReport base = mise("kde_plugin", kde, Scenario::eps_mixture(0.0, sigma), n, R, seed);
        for (double eps : eps_list) {
            const MiseReport r = eps == 0.0 ? base : mise("kde_plugin", kde, Scenario::eps_mixture(eps, sigma), n, R, seed);
            rows.push_back({n, eps, r.mise_mean, r.mise_mc_stderr,
                            100.0 * (r.mise_mean - base.mise_mean) / base.mise_mean});
        }
    }
    return rows;
}

std::vector<Table2Row> table2_compare(const std::vector<double>& theta_grid, std::size_t n,
                                      std::size_t R, std::uint64_t seed, double spread) {
    std::vector<Table2Row> rows;
    const double x0[1] = {0.0};
    const Estimator methods[4] = {spline_estimator(), cos2_plugin_estimator(),
                                  kde_cv_estimator(KernelKind::Epanechnikov),
                                  kde_plugin_estimator(KernelKind::Epanechnikov)};
    for (std::size_t t = 0; t < theta_grid.size(); ++t) {
        const Scenario sc = Scenario::wrapped_bimodal(theta_grid[t], spread);
        const double truth = sc.density(0.0);
        std::vector<std::array<double, 4>> err(R);
        parallel_for(R, [&](std::size_t r) {
            const AngularSample s = sample_scenario(sc, n, replicate_seed(seed + t, r));
            for (int m = 0; m < 4; ++m) {
                const double d = methods[m](s, x0)[0] - truth;
                err[r][m] = d * d;
            }
        });
        double acc[4] = {0, 0, 0, 0};
        for (const auto& e : err)
            for (int m = 0; m < 4; ++m) acc[m] += e[m];
        const double inv = 1.0 / static_cast<double>(R);
        rows.push_back({theta_grid[t], acc[0] * inv, acc[1] * inv, acc[2] * inv, acc[3] * inv});
    }
    return rows;
}

}  // namespace circspline
