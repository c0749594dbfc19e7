#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "circspline/circle_core.hpp"
#include "circspline/pipeline.hpp"
#include <json.hpp>

namespace circspline {

struct GroupedBin {
    double start_deg = 0.0;
    double end_deg = 0.0;  // exclusive upper edge in degrees
    long long count = 0;
};

struct GroupedData {
    std::vector<GroupedBin> bins;
    long long total() const;
};

AngularSample load_angles(const std::string& path, bool degrees = false);
/// Rows "start,end,count" with inclusive integer-degree labels: "0,19,75" is [0, 20) degrees.
GroupedData parse_grouped(const std::string& path);
AngularSample load_grouped(const std::string& path, std::uint64_t jitter_seed,
                           double rotation_offset_deg = 0.0);
AngularSample jitter_grouped(const GroupedData& data, std::uint64_t jitter_seed,
                             double rotation_offset_deg = 0.0);

struct RunInfo {
    std::string source;
    std::string units = "radians";
    bool grouped = false;
    std::optional<std::uint64_t> seed;
};

nlohmann::json report_to_json(const DetectionReport& report);
DetectionReport report_from_json(const nlohmann::json& j);
nlohmann::json output_document(const AngularSample& sample, const PipelineConfig& cfg,
                               const PipelineResult& result, const RunInfo& info);
nlohmann::json detection_document(const AngularSample& sample, const PipelineConfig& cfg,
                                  const DetectionReport& report, const RunInfo& info);
/// Empty when valid; otherwise one message per violation.
std::vector<std::string> validate_output_document(const nlohmann::json& doc);

/// CSV with header x,density,is_feature_boundary from an estimate document.
std::string plot_csv(const nlohmann::json& doc);

std::string format_double(double v);
/// Indented JSON text with every float printed to 17 significant digits.
std::string dump_json(const nlohmann::json& j);
const char* library_version();

}  // namespace circspline
