#include "circspline/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "circspline/errors.hpp"
#include "circspline/io.hpp"
#include "circspline/sim_harness.hpp"

namespace circspline {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t parse_seed(const std::string& s, const char* what) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw UsageError(std::string(what) + ": not an unsigned integer: " + s);
    return v;
}

// --seed wins, then CIRCSPLINE_SEED, then 0.
std::uint64_t resolve_seed(const std::optional<std::string>& flag) {
    if (flag) return parse_seed(*flag, "--seed");
    if (const char* env = std::getenv("CIRCSPLINE_SEED"); env && *env) return parse_seed(env, "CIRCSPLINE_SEED");
    return 0;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << text;
    if (!out) throw DataError(path + ": write failed");
}

struct InputOptions {
    std::string input;
    bool grouped = false;
    bool degrees = false;
    double rotation = 0.0;
    std::optional<std::string> seed;
    int max_layer = 0;
    double alpha = 0.05;
    std::string lambda = "auto";
    int grid_points = 1024;
};

void add_input_options(CLI::App* app, InputOptions& o) {
    app->add_option("--input", o.input, "angle file (one per line) or grouped CSV")->required();
    app->add_flag("--grouped", o.grouped, "input is start_deg,end_deg,count rows");
    app->add_flag("--degrees", o.degrees, "angles are in degrees");
    app->add_option("--rotation", o.rotation, "extra rotation in degrees applied to jittered grouped data");
    app->add_option("--seed", o.seed, "seed for grouped-data jitter");
    app->add_option("--max-layer", o.max_layer, "finest dyadic layer (0 picks from n)")->check(CLI::Range(0, 16));
    app->add_option("--alpha", o.alpha, "family-wise level")->check(CLI::Range(1e-12, 1.0));
}

AngularSample load_input(const InputOptions& o, RunInfo& info, std::uint64_t seed) {
    info.source = o.input;
    info.grouped = o.grouped;
    info.units = o.grouped || o.degrees ? "degrees" : "radians";
    if (o.grouped) {
        info.seed = seed;
        return load_grouped(o.input, seed, o.rotation);
    }
    return load_angles(o.input, o.degrees);
}

PipelineConfig make_config(const InputOptions& o) {
    PipelineConfig cfg;
    cfg.max_layer = o.max_layer;
    cfg.alpha = o.alpha;
    cfg.grid_points = o.grid_points;
    if (o.lambda != "auto") {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(o.lambda.data(), o.lambda.data() + o.lambda.size(), v);
        if (ec != std::errc() || p != o.lambda.data() + o.lambda.size() || !(v > 0.0))
            throw UsageError("--lambda must be 'auto' or a positive number");
        cfg.fixed_lambda = v;
    }
    return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string t; std::getline(ss, t, ',');)
        if (!t.empty()) out.push_back(t);
    return out;
}

Estimator estimator_by_name(const std::string& name, const Scenario& s) {
    if (name == "pipeline") return pipeline_estimator();
    if (name == "spline") return spline_estimator();
    if (name == "kde_plugin") return kde_plugin_estimator();
    if (name == "kde_cv") return kde_cv_estimator();
    if (name == "cos2_plugin") return cos2_plugin_estimator();
    if (name == "oracle") return oracle_estimator(s);
    if (name == "constant") return constant_estimator();
    throw UsageError("unknown method '" + name + "'");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Density estimation on the circle with feature detection"};
    app.require_subcommand(1);

    InputOptions est_opt;
    std::string est_output;
    auto* est = app.add_subcommand("estimate", "fit the combined density estimate");
    add_input_options(est, est_opt);
    est->add_option("--lambda", est_opt.lambda, "penalty: 'auto' or a positive number");
    est->add_option("--grid", est_opt.grid_points, "output grid size")->check(CLI::Range(16, 1 << 20));
    est->add_option("--output", est_output, "output JSON path")->required();

    InputOptions det_opt;
    std::string det_output;
    auto* det = app.add_subcommand("detect", "run feature detection only");
    add_input_options(det, det_opt);
    det->add_option("--output", det_output, "output JSON path")->required();

    std::string sim_scenario, sim_output, sim_methods = "pipeline,spline,kde_plugin,kde_cv";
    std::size_t sim_n = 0, sim_R = 0;
    std::optional<std::string> sim_seed;
    double sim_eps = 0.05, sim_theta = 1.0;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo MISE for one scenario");
    sim->add_option("--scenario", sim_scenario, "eps_mixture|wrapped_bimodal|unif_triangular|piecewise_uniform|uniform")
        ->required();
    sim->add_option("--n", sim_n, "sample size")->required()->check(CLI::PositiveNumber);
    sim->add_option("--replicates", sim_R, "replicate count")->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "master seed");
    sim->add_option("--eps", sim_eps, "atom mass for eps_mixture");
    sim->add_option("--theta", sim_theta, "mode offset for wrapped_bimodal");
    sim->add_option("--methods", sim_methods, "comma list of estimators");
    sim->add_option("--output", sim_output, "output CSV path")->required();

    int bench_table = 1;
    std::size_t bench_R = 200;
    std::optional<std::string> bench_seed;
    std::string bench_output;
    auto* bench = app.add_subcommand("bench", "comparison tables");
    bench->add_option("--table", bench_table, "1: KDE MISE increase under atoms; 2: MSE at 0 vs mode spread")
        ->check(CLI::IsMember({1, 2}));
    bench->add_option("--replicates", bench_R, "replicate count")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_seed, "master seed");
    bench->add_option("--output", bench_output, "output CSV path (stdout when omitted)");

    std::string plot_from, plot_out;
    auto* plot = app.add_subcommand("plot-data", "curve CSV from an estimate JSON");
    plot->add_option("--from", plot_from, "estimate JSON")->required();
    plot->add_option("--out", plot_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (est->parsed() || det->parsed()) {
            InputOptions& o = est->parsed() ? est_opt : det_opt;
            RunInfo info;
            const AngularSample sample = load_input(o, info, resolve_seed(o.seed));
            PipelineConfig cfg = make_config(o);
            nlohmann::json doc;
            if (est->parsed()) {
                const PipelineResult result = estimate(sample, cfg);
                doc = output_document(sample, cfg, result, info);
                for (const auto& w : result.warnings) err << "warning: " << w << "\n";
            } else {
                DetectionConfig dc;
                dc.max_layer = cfg.max_layer > 0 ? cfg.max_layer : default_max_layer(sample.size());
                dc.first_layer = std::min(cfg.first_layer, dc.max_layer);
                dc.alpha = cfg.alpha;
                doc = detection_document(sample, cfg, detect_features(sample, dc), info);
            }
            write_file(est->parsed() ? est_output : det_output, dump_json(doc));
            return 0;
        }
        if (sim->parsed()) {
            Scenario s = Scenario::from_name(sim_scenario);
            if (s.kind == ScenarioKind::EpsMixture) s = Scenario::eps_mixture(sim_eps, s.sigma);
            if (s.kind == ScenarioKind::WrappedBimodal) s = Scenario::wrapped_bimodal(sim_theta, s.sigma);
            s.validate();
            const std::uint64_t seed = resolve_seed(sim_seed);
            std::string csv = "method,scenario,n,replicates,failures,mise,mise_stderr\n";
            for (const auto& m : split_list(sim_methods)) {
                const MiseReport r = mise(m, estimator_by_name(m, s), s, sim_n, sim_R, seed);
                csv += m + "," + s.name() + "," + std::to_string(r.n) + "," + std::to_string(r.replicates) + "," +
                       std::to_string(r.failures) + "," + format_double(r.mise_mean) + "," +
                       format_double(r.mise_mc_stderr) + "\n";
            }
            write_file(sim_output, csv);
            return 0;
        }
        if (bench->parsed()) {
            const std::uint64_t seed = resolve_seed(bench_seed);
            std::string csv;
            if (bench_table == 1) {
                csv = "n,eps,mise,mise_stderr,percent_increase\n";
                for (const auto& r : table1_percent_increase({0.01, 0.05, 0.10}, {100, 500, 1000}, bench_R, seed))
                    csv += std::to_string(r.n) + "," + format_double(r.eps) + "," + format_double(r.mise) + "," +
                           format_double(r.mise_stderr) + "," + format_double(r.percent_increase) + "\n";
            } else {
                std::vector<double> thetas;
                for (int i = 2; i <= 31; ++i) thetas.push_back(0.05 * i);
                csv = "theta,mse_spline,mse_cos2,mse_kde_cv,mse_kde_plugin\n";
                for (const auto& r : table2_compare(thetas, 50, bench_R, seed))
                    csv += format_double(r.theta) + "," + format_double(r.mse_spline) + "," +
                           format_double(r.mse_cos2) + "," + format_double(r.mse_kde_cv) + "," +
                           format_double(r.mse_kde_plugin) + "\n";
            }
            if (bench_output.empty())
                out << csv;
            else
                write_file(bench_output, csv);
            return 0;
        }
        if (plot->parsed()) {
            std::ifstream in(plot_from);
            if (!in) throw DataError(plot_from + ": cannot open file");
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw DataError(plot_from + ": invalid JSON: " + e.what());
            }
            const auto problems = validate_output_document(doc);
            if (!problems.empty()) throw DataError(plot_from + ": " + problems.front());
            if (doc["kind"] != "estimate") throw DataError(plot_from + ": not an estimate document");
            write_file(plot_out, plot_csv(doc));
            return 0;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationError& e) {
        err << "numerical failure [" << e.stage() << "]: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "numerical failure [unknown]: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

}  // namespace circspline
