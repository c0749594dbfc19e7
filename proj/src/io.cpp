#include "circspline/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "circspline/errors.hpp"
#include "circspline/simd.hpp"

namespace circspline {

using nlohmann::json;

const char* library_version() { return "1.0.0"; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {
void dump_into(const json& j, std::string& out, int depth) {
    const std::string pad(2 * static_cast<std::size_t>(depth + 1), ' ');
    const std::string close(2 * static_cast<std::size_t>(depth), ' ');
    switch (j.type()) {
        case json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? format_double(v) : "null";
            break;
        }
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + json(it.key()).dump() + ": ";
                dump_into(it.value(), out, depth + 1);
            }
            out += "\n" + close + "}";
            break;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            // numeric arrays stay on one line; the density grid would otherwise be thousands of lines
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); });
            out += flat ? "[" : "[\n";
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += flat ? ", " : ",\n";
                first = false;
                if (!flat) out += pad;
                dump_into(e, out, depth + 1);
            }
            out += flat ? "]" : "\n" + close + "]";
            break;
        }
        default:
            out += j.dump();
    }
}
}  // namespace

std::string dump_json(const json& j) {
    std::string out;
    dump_into(j, out, 0);
    return out + "\n";
}

long long GroupedData::total() const {
    long long t = 0;
    for (const auto& b : bins) t += b.count;
    return t;
}

namespace {
std::string trim(std::string s) {
    const auto hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open file");
    return in;
}
}  // namespace

AngularSample load_angles(const std::string& path, bool degrees) {
    std::ifstream in = open_input(path);
    std::vector<double> v;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto x = parse_number(t);
        if (!x || !std::isfinite(*x))
            throw DataError(path + ":" + std::to_string(lineno) + ": cannot parse angle '" + t + "'");
        v.push_back(degrees ? *x * kPi / 180.0 : *x);
    }
    if (v.empty()) throw DataError(path + ": no angles found");
    return AngularSample(std::move(v));
}

GroupedData parse_grouped(const std::string& path) {
    std::ifstream in = open_input(path);
    GroupedData data;
    std::string line;
    bool seen_row = false;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(t);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
        const auto where = path + ":" + std::to_string(lineno) + ": ";
        if (fields.size() != 3) throw DataError(where + "expected start_deg,end_deg,count");
        const auto a = parse_number(fields[0]), b = parse_number(fields[1]), c = parse_number(fields[2]);
        if (!a || !b || !c) {
            if (!seen_row && data.bins.empty()) {  // header line
                seen_row = true;
                continue;
            }
            throw DataError(where + "non-numeric field");
        }
        seen_row = true;
        if (*c < 0 || std::floor(*c) != *c) throw DataError(where + "count must be a non-negative integer");
        const double hi = *b + 1.0;
        if (*a < 0.0 || *a >= 360.0 || hi > 360.0 || !(hi > *a))
            throw DataError(where + "bin must satisfy 0 <= start <= end < 360");
        data.bins.push_back({*a, hi, static_cast<long long>(*c)});
    }
    if (data.bins.empty()) throw DataError(path + ": no bins found");
    std::vector<GroupedBin> sorted = data.bins;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.start_deg < y.start_deg; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].start_deg < sorted[i - 1].end_deg)
            throw DataError(path + ": overlapping bins starting at " + format_double(sorted[i - 1].start_deg) +
                            " and " + format_double(sorted[i].start_deg));
    return data;
}

AngularSample jitter_grouped(const GroupedData& data, std::uint64_t jitter_seed, double rotation_offset_deg) {
    std::mt19937_64 rng(jitter_seed);
    std::vector<double> v;
    for (const auto& b : data.bins) {
        std::uniform_real_distribution<double> u(b.start_deg, b.end_deg);
        for (long long i = 0; i < b.count; ++i) v.push_back((u(rng) + rotation_offset_deg) * kPi / 180.0);
    }
    if (v.empty()) throw DataError("grouped data contains no observations");
    return AngularSample(std::move(v));
}

AngularSample load_grouped(const std::string& path, std::uint64_t jitter_seed, double rotation_offset_deg) {
    return jitter_grouped(parse_grouped(path), jitter_seed, rotation_offset_deg);
}

namespace {
json arc_json(const Arc& a) { return {{"start", a.start}, {"length", a.length}, {"end", a.end()}}; }

Arc arc_from_json(const json& j) { return {j.at("start").get<double>(), j.at("length").get<double>()}; }

json config_json(const PipelineConfig& cfg, int max_layer) {
    json lam = cfg.fixed_lambda ? json(*cfg.fixed_lambda) : json("auto");
    return {{"max_layer", max_layer},
            {"first_layer", cfg.first_layer},
            {"alpha", cfg.alpha},
            {"lambda", lam},
            {"lambda_grid",
             {{"min", cfg.lambda_grid.values.front()},
              {"max", cfg.lambda_grid.values.back()},
              {"count", cfg.lambda_grid.values.size()}}},
            {"grid_points", cfg.grid_points},
            {"detection", cfg.detection},
            {"outlier_max_fraction", cfg.outlier_max_fraction},
            {"outlier_max_arc", cfg.outlier_max_arc}};
}

json input_json(const AngularSample& sample, const RunInfo& info) {
    return {{"source", info.source}, {"n", sample.size()}, {"units", info.units}, {"grouped", info.grouped}};
}

json provenance_json(const RunInfo& info) {
    return {{"version", library_version()},
            {"seed", info.seed ? json(*info.seed) : json(nullptr)},
            {"simd", simd::isa_name(simd::active_isa())}};
}
}  // namespace

json report_to_json(const DetectionReport& r) {
    json feats = json::array();
    for (const auto& f : r.features)
        feats.push_back({{"kind", feature_kind_name(f.kind)},
                         {"interval", arc_json(f.interval)},
                         {"location", f.location},
                         {"aggregated_p", f.aggregated_p},
                         {"rejected_at_level", f.alpha},
                         {"first_cell", f.first_cell},
                         {"cell_count", f.cell_count}});
    json ext = json::array();
    for (const auto& a : r.support_exterior) ext.push_back(arc_json(a));
    return {{"max_layer", r.max_layer},       {"first_layer", r.first_layer},
            {"alpha", r.alpha},               {"phase1_tests", r.phase1_tests},
            {"phase2_tests", r.phase2_tests}, {"removed_points", r.removed_points.size()},
            {"features", feats},              {"support_exterior", ext}};
}

DetectionReport report_from_json(const json& j) {
    DetectionReport r;
    r.max_layer = j.at("max_layer").get<int>();
    r.first_layer = j.at("first_layer").get<int>();
    r.alpha = j.at("alpha").get<double>();
    r.phase1_tests = j.at("phase1_tests").get<std::size_t>();
    r.phase2_tests = j.at("phase2_tests").get<std::size_t>();
    for (const auto& f : j.at("features")) {
        Feature ft;
        const auto kind = feature_kind_from_name(f.at("kind").get<std::string>());
        if (!kind) throw DataError("unknown feature kind");
        ft.kind = *kind;
        ft.interval = arc_from_json(f.at("interval"));
        ft.location = f.at("location").get<double>();
        ft.aggregated_p = f.at("aggregated_p").get<double>();
        ft.alpha = f.at("rejected_at_level").get<double>();
        ft.first_cell = f.at("first_cell").get<std::size_t>();
        ft.cell_count = f.at("cell_count").get<std::size_t>();
        r.features.push_back(ft);
    }
    for (const auto& a : j.at("support_exterior")) r.support_exterior.push_back(arc_from_json(a));
    return r;
}

json output_document(const AngularSample& sample, const PipelineConfig& cfg, const PipelineResult& result,
                     const RunInfo& info) {
    const auto& est = result.estimate;
    json curve = json::array();
    for (const auto& m : result.lambda.curve)
        curve.push_back({{"lambda", m.lambda}, {"bias", m.bias_term}, {"variance", m.variance_term}, {"total", m.total}});
    json locals = json::array();
    for (const auto& lc : est.locals)
        locals.push_back({{"x0", lc.params.x0},
                          {"interval", arc_json(lc.params.interval)},
                          {"beta0", lc.params.beta0},
                          {"beta1", lc.params.beta1},
                          {"beta2", lc.params.beta2},
                          {"mass", lc.mass},
                          {"diverged", lc.params.diverged},
                          {"degenerate", lc.params.degenerate}});
    const auto& b = result.lambda.best;
    return {{"schema_version", 1},
            {"kind", "estimate"},
            {"input", input_json(sample, info)},
            {"config", config_json(cfg, result.report.max_layer)},
            {"density", {{"x", est.grid}, {"value", est.values}}},
            {"detection", report_to_json(result.report)},
            {"diagnostics",
             {{"lambda", result.lambda.lambda},
              {"mise", {{"bias", b.bias_term}, {"variance", b.variance_term}, {"total", b.total}}},
              {"mise_curve", curve},
              {"locals", locals},
              {"smooth_mass", est.smooth.mass},
              {"normalizer", est.normalizer},
              {"clipped_points", est.clipped_points},
              {"detection_skipped", result.detection_skipped},
              {"warnings", result.warnings}}},
            {"provenance", provenance_json(info)}};
}

json detection_document(const AngularSample& sample, const PipelineConfig& cfg, const DetectionReport& report,
                        const RunInfo& info) {
    return {{"schema_version", 1},
            {"kind", "detect"},
            {"input", input_json(sample, info)},
            {"config", config_json(cfg, report.max_layer)},
            {"detection", report_to_json(report)},
            {"provenance", provenance_json(info)}};
}

std::vector<std::string> validate_output_document(const json& doc) {
    std::vector<std::string> err;
    auto need = [&](const json& j, const char* key, auto pred, const char* what) {
        if (!j.is_object() || !j.contains(key) || !pred(j.at(key))) {
            err.push_back(std::string("field '") + key + "' must be " + what);
            return false;
        }
        return true;
    };
    auto is_num = [](const json& j) { return j.is_number(); };
    auto is_obj = [](const json& j) { return j.is_object(); };
    auto is_arr = [](const json& j) { return j.is_array(); };
    auto is_str = [](const json& j) { return j.is_string(); };
    auto valid_arc = [&](const json& a, const std::string& where) {
        if (!a.is_object() || !a.contains("start") || !a.contains("length") || !a["start"].is_number() ||
            !a["length"].is_number()) {
            err.push_back(where + ": arc needs numeric start and length");
            return;
        }
        const double s = a["start"].get<double>(), l = a["length"].get<double>();
        if (!(s >= 0.0 && s < kTwoPi)) err.push_back(where + ": start outside [0, 2pi)");
        if (!(l > 0.0 && l <= kTwoPi)) err.push_back(where + ": length outside (0, 2pi]");
    };

    if (!doc.is_object()) return {"document must be a JSON object"};
    if (!doc.contains("schema_version") || doc["schema_version"] != 1) err.push_back("schema_version must be 1");
    if (need(doc, "kind", is_str, "a string")) {
        const auto k = doc["kind"].get<std::string>();
        if (k != "estimate" && k != "detect") err.push_back("kind must be 'estimate' or 'detect'");
    }
    if (need(doc, "input", is_obj, "an object")) {
        const auto& in = doc["input"];
        if (!in.contains("n") || !in["n"].is_number_unsigned() || in["n"].get<std::size_t>() < 1)
            err.push_back("input.n must be a positive integer");
    }
    need(doc, "config", is_obj, "an object");
    if (need(doc, "provenance", is_obj, "an object")) need(doc["provenance"], "version", is_str, "a string");
    if (need(doc, "detection", is_obj, "an object")) {
        const auto& d = doc["detection"];
        if (need(d, "features", is_arr, "an array"))
            for (std::size_t i = 0; i < d["features"].size(); ++i) {
                const auto& f = d["features"][i];
                const std::string where = "detection.features[" + std::to_string(i) + "]";
                if (!f.is_object() || !f.contains("kind") || !f["kind"].is_string() ||
                    !feature_kind_from_name(f["kind"].get<std::string>()))
                    err.push_back(where + ": unknown kind");
                if (!f.is_object() || !f.contains("interval")) {
                    err.push_back(where + ": missing interval");
                    continue;
                }
                valid_arc(f["interval"], where);
                if (!f.contains("aggregated_p") || !f["aggregated_p"].is_number() ||
                    f["aggregated_p"].get<double>() < 0.0 || f["aggregated_p"].get<double>() > 1.0)
                    err.push_back(where + ": aggregated_p must be in [0, 1]");
            }
        if (need(d, "support_exterior", is_arr, "an array"))
            for (std::size_t i = 0; i < d["support_exterior"].size(); ++i)
                valid_arc(d["support_exterior"][i], "detection.support_exterior[" + std::to_string(i) + "]");
    }
    if (doc.value("kind", "") == "estimate") {
        if (need(doc, "density", is_obj, "an object")) {
            const auto& d = doc["density"];
            if (need(d, "x", is_arr, "an array") && need(d, "value", is_arr, "an array")) {
                if (d["x"].size() != d["value"].size() || d["x"].empty())
                    err.push_back("density.x and density.value must be nonempty and equal length");
                for (const auto& x : d["x"])
                    if (!x.is_number() || x.get<double>() < 0.0 || x.get<double>() >= kTwoPi) {
                        err.push_back("density.x entries must lie in [0, 2pi)");
                        break;
                    }
                for (const auto& v : d["value"])
                    if (!v.is_number() || !(v.get<double>() >= 0.0) || !std::isfinite(v.get<double>())) {
                        err.push_back("density.value entries must be finite and >= 0");
                        break;
                    }
            }
        }
        if (need(doc, "diagnostics", is_obj, "an object")) {
            need(doc["diagnostics"], "lambda", is_num, "a number");
            need(doc["diagnostics"], "mise_curve", is_arr, "an array");
            need(doc["diagnostics"], "locals", is_arr, "an array");
        }
    }
    return err;
}

std::string plot_csv(const json& doc) {
    const auto& xs = doc.at("density").at("x");
    const auto& vs = doc.at("density").at("value");
    const std::size_t m = xs.size();
    std::vector<char> mark(m, 0);
    auto nearest = [&](double a) {
        return static_cast<std::size_t>(std::llround(wrap_angle(a) / kTwoPi * static_cast<double>(m))) % m;
    };
    if (doc.contains("detection"))
        for (const auto& f : doc["detection"]["features"]) {
            if (f.at("kind") == "support_boundary") {
                mark[nearest(f.at("location").get<double>())] = 1;
            } else {
                const Arc a = arc_from_json(f.at("interval"));
                mark[nearest(a.start)] = 1;
                mark[nearest(a.start + a.length)] = 1;
            }
        }
    std::string out = "x,density,is_feature_boundary\n";
    for (std::size_t i = 0; i < m; ++i)
        out += format_double(xs[i].get<double>()) + "," + format_double(vs[i].get<double>()) + "," +
               (mark[i] ? "1" : "0") + "\n";
    return out;
}

}  // namespace circspline
