#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "recoeval/metrics.hpp"
#include "recoeval/protocol.hpp"

namespace recoeval {

using Json = nlohmann::ordered_json;

struct EvaluationReport {
    std::string model;
    Json configuration = Json::object();  // effective run configuration
    Json dataset = Json::object();        // sizes and segment thresholds
    MetricTable core;
    std::optional<MetricTable> explore;   // absent when the model has no similarity kernel
    std::string explore_kernel;           // how the explore kernel was obtained

    // Metadata: wall-clock and training diagnostics, excluded from byte-identity checks.
    PhaseTimings core_timings;
    std::optional<PhaseTimings> explore_timings;
    double train_seconds = 0.0;
    Json training = Json::object();
};

// Deterministic document: model, configuration, dataset, core, explore.
[[nodiscard]] Json report_json(const EvaluationReport& report);
[[nodiscard]] Json metadata_json(const EvaluationReport& report);

// JSON sections {decide, compare, discover, ami_excluded} for one table, and back.
[[nodiscard]] Json table_json(const MetricTable& table);
[[nodiscard]] MetricTable table_from_json(const Json& sections);

// Segment table: one row per metric, columns HuserPitem, LuserPitem, HuserUitem,
// LuserUitem, Global. COMP is segmented by user class only and repeats across item columns.
[[nodiscard]] std::string render_table(const MetricTable& table);
[[nodiscard]] std::string render_summary(const EvaluationReport& report);

// Side-by-side view of report documents; best value per cell marked with '*'
// (lowest RMSE, highest COMP/Precision/AMI). Throws EvaluationError for reports with a
// different rating scale or segment scheme.
[[nodiscard]] std::string compare_reports(const std::vector<Json>& reports, const std::vector<std::string>& labels);

}  // namespace recoeval
