#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "recoeval/dataset.hpp"
#include "recoeval/protocol.hpp"
#include "recoeval/report.hpp"

namespace recoeval {

// Environment variable naming the default output directory of `run`.
inline constexpr const char* kOutputDirEnv = "RECOEVAL_OUTPUT_DIR";

struct ModelParams {
    std::string type;  // knn | mf | default | random
    std::size_t k = 100;
    std::size_t gamma = 50;
    std::size_t factors = 16;
    double learning_rate = 0.030;
    double regularization = 0.008;
    double budget_seconds = 5400.0;
    double validation_fraction = 0.015;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 1;
    bool include_pinned_slots = true;

    [[nodiscard]] bool operator==(const ModelParams&) const = default;
};

struct RunManifest {
    std::string dataset_path;  // as written; relative paths resolve against base_dir
    DatasetFormat format = DatasetFormat::Csv;
    RatingScale scale{};
    double split_ratio = 0.9;
    std::uint64_t split_seed = 42;
    ModelParams model;
    ProtocolConfig protocol;
    std::string output_dir;
    bool write_models = true;

    std::filesystem::path base_dir;  // not part of the echoed configuration

    [[nodiscard]] std::filesystem::path resolved_dataset() const;
    [[nodiscard]] std::filesystem::path resolved_output() const;
    [[nodiscard]] bool operator==(const RunManifest& o) const;
};

enum class KeyType { String, Real, Integer, Boolean };

struct ManifestKey {
    std::string_view key;  // dotted path, also the CLI flag name
    KeyType type;
    std::string_view help;
};

// Every accepted manifest key.
[[nodiscard]] const std::vector<ManifestKey>& manifest_keys();

[[nodiscard]] Json read_manifest_file(const std::filesystem::path& path);

// Sets a dotted key from its textual form, typed per manifest_keys().
void apply_override(Json& manifest, std::string_view key, const std::string& value);

// Validates and fills defaults. Throws ConfigError.
[[nodiscard]] RunManifest parse_manifest(const Json& manifest, const std::filesystem::path& base_dir);

// Effective configuration, every key present.
[[nodiscard]] Json manifest_json(const RunManifest& manifest);

// Trains the model named by params.type on data.train(). `training` receives
// diagnostics (epochs, stop reason) for the metadata document.
[[nodiscard]] std::unique_ptr<Predictor> train_model(const ModelParams& params, const SplitDataset& data,
                                                     const SegmentModel& segments, Json* training = nullptr);

struct RunResult {
    EvaluationReport report;
    std::vector<std::filesystem::path> files;
};

// load -> split -> segment -> train -> core protocol -> explore -> write reports.
// Errors surface as DatasetError, TrainingError or EvaluationError.
[[nodiscard]] RunResult execute_run(const RunManifest& manifest, std::ostream* progress = nullptr);

}  // namespace recoeval
