#include "recoeval/run.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "recoeval/baselines.hpp"
#include "recoeval/knn.hpp"
#include "recoeval/mf.hpp"

namespace recoeval {

namespace {

const std::vector<ManifestKey> kKeys = {
    {"dataset.path", KeyType::String, "rating log file (or Netflix directory)"},
    {"dataset.format", KeyType::String, "csv | netflix"},
    {"dataset.rating_min", KeyType::Real, "lowest rating"},
    {"dataset.rating_max", KeyType::Real, "highest rating"},
    {"dataset.discrete", KeyType::Boolean, "ratings are integer levels"},
    {"split.ratio", KeyType::Real, "train share of the logs, in (0, 1)"},
    {"split.seed", KeyType::Integer, "seed of the train/test split"},
    {"model.type", KeyType::String, "knn | mf | default | random"},
    {"model.k", KeyType::Integer, "KNN neighborhood size"},
    {"model.gamma", KeyType::Integer, "weighted Pearson support for full weight"},
    {"model.factors", KeyType::Integer, "MF factor count, >= 3"},
    {"model.learning_rate", KeyType::Real, "MF SGD learning rate"},
    {"model.regularization", KeyType::Real, "MF L2 regularization"},
    {"model.budget_seconds", KeyType::Real, "MF wall-clock training budget"},
    {"model.validation_fraction", KeyType::Real, "MF early-stopping share of train, in (0, 0.5)"},
    {"model.max_epochs", KeyType::Integer, "MF epoch cap"},
    {"model.seed", KeyType::Integer, "model seed (MF init/shuffle, random predictor)"},
    {"model.include_pinned_slots", KeyType::Boolean, "MF similarity uses the bias slots"},
    {"protocol.n", KeyType::Integer, "top-N size"},
    {"protocol.k", KeyType::Integer, "explore kernel neighborhood size"},
    {"protocol.exclude_seen", KeyType::Boolean, "drop train items from top-N candidates"},
    {"output.dir", KeyType::String, "report directory"},
    {"output.write_models", KeyType::Boolean, "also write model artifacts"},
};

const ManifestKey* key_info(std::string_view key) {
    for (const auto& k : kKeys) {
        if (k.key == key) return &k;
    }
    return nullptr;
}

std::pair<std::string, std::string> split_key(std::string_view key) {
    const auto dot = key.find('.');
    return {std::string(key.substr(0, dot)), std::string(key.substr(dot + 1))};
}

bool type_matches(const Json& v, KeyType t) {
    switch (t) {
        case KeyType::String: return v.is_string();
        case KeyType::Real: return v.is_number();
        case KeyType::Integer: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        case KeyType::Boolean: return v.is_boolean();
    }
    return false;
}

void write_text(const std::filesystem::path& path, const std::string& text, std::vector<std::filesystem::path>& files) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw EvaluationError("cannot write " + path.string());
    files.push_back(path);
}

template <class Fn>
auto as_training(Fn&& fn) {
    try {
        return fn();
    } catch (const TrainingError&) {
        throw;
    } catch (const ConfigError& e) {
        throw TrainingError(e.what());
    } catch (const std::exception& e) {
        throw TrainingError(std::string("training failed: ") + e.what());
    }
}

template <class Fn>
auto as_evaluation(Fn&& fn) {
    try {
        return fn();
    } catch (const EvaluationError&) {
        throw;
    } catch (const std::exception& e) {
        throw EvaluationError(std::string("evaluation failed: ") + e.what());
    }
}

}  // namespace

const std::vector<ManifestKey>& manifest_keys() { return kKeys; }

std::filesystem::path RunManifest::resolved_dataset() const {
    const std::filesystem::path p(dataset_path);
    return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunManifest::resolved_output() const {
    const std::filesystem::path p(output_dir);
    return p.is_absolute() ? p : base_dir / p;
}

bool RunManifest::operator==(const RunManifest& o) const {
    return dataset_path == o.dataset_path && format == o.format && scale == o.scale && split_ratio == o.split_ratio &&
           split_seed == o.split_seed && model == o.model && protocol == o.protocol && output_dir == o.output_dir &&
           write_models == o.write_models;
}

Json read_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read manifest " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
}

void apply_override(Json& manifest, std::string_view key, const std::string& value) {
    const auto* info = key_info(key);
    if (!info) throw ConfigError("unknown manifest key '" + std::string(key) + "'");
    const auto [section, name] = split_key(key);
    Json parsed;
    try {
        switch (info->type) {
            case KeyType::String: parsed = value; break;
            case KeyType::Real: {
                std::size_t used = 0;
                parsed = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                break;
            }
            case KeyType::Integer: {
                std::size_t used = 0;
                if (!value.empty() && value.front() == '-') throw std::invalid_argument(value);
                parsed = static_cast<std::uint64_t>(std::stoull(value, &used));
                if (used != value.size()) throw std::invalid_argument(value);
                break;
            }
            case KeyType::Boolean:
                if (value == "true" || value == "1") {
                    parsed = true;
                } else if (value == "false" || value == "0") {
                    parsed = false;
                } else {
                    throw std::invalid_argument(value);
                }
                break;
        }
    } catch (const std::logic_error&) {
        throw ConfigError("bad value '" + value + "' for " + std::string(key));
    }
    if (!manifest.is_object()) manifest = Json::object();
    if (!manifest.contains(section) || !manifest[section].is_object()) manifest[section] = Json::object();
    manifest[section][name] = std::move(parsed);
}

RunManifest parse_manifest(const Json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
    for (const auto& [section, body] : j.items()) {
        if (!body.is_object()) throw ConfigError("manifest section '" + section + "' must be an object");
        for (const auto& [name, value] : body.items()) {
            const std::string key = section + "." + name;
            const auto* info = key_info(key);
            if (!info) throw ConfigError("unknown manifest key '" + key + "'");
            if (!type_matches(value, info->type)) throw ConfigError("wrong type for manifest key '" + key + "'");
        }
    }
    auto get = [&](std::string_view key, auto fallback) {
        const auto [section, name] = split_key(key);
        using T = decltype(fallback);
        if (!j.contains(section) || !j.at(section).contains(name)) return fallback;
        return j.at(section).at(name).template get<T>();
    };

    RunManifest m;
    m.base_dir = base_dir;
    m.dataset_path = get("dataset.path", std::string());
    if (m.dataset_path.empty()) throw ConfigError("manifest needs dataset.path");
    m.format = parse_dataset_format(get("dataset.format", std::string("csv")));
    m.scale.min = get("dataset.rating_min", 1.0);
    m.scale.max = get("dataset.rating_max", 5.0);
    m.scale.discrete = get("dataset.discrete", true);
    m.split_ratio = get("split.ratio", 0.9);
    m.split_seed = get("split.seed", std::uint64_t{42});

    auto& p = m.model;
    p.type = get("model.type", std::string());
    p.k = get("model.k", p.k);
    p.gamma = get("model.gamma", p.gamma);
    p.factors = get("model.factors", p.factors);
    p.learning_rate = get("model.learning_rate", p.learning_rate);
    p.regularization = get("model.regularization", p.regularization);
    p.budget_seconds = get("model.budget_seconds", p.budget_seconds);
    p.validation_fraction = get("model.validation_fraction", p.validation_fraction);
    p.max_epochs = get("model.max_epochs", p.max_epochs);
    p.seed = get("model.seed", p.seed);
    p.include_pinned_slots = get("model.include_pinned_slots", p.include_pinned_slots);

    m.protocol.n = get("protocol.n", m.protocol.n);
    m.protocol.k = get("protocol.k", m.protocol.k);
    m.protocol.exclude_seen = get("protocol.exclude_seen", m.protocol.exclude_seen);

    std::string default_out = "recoeval-out";
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) default_out = env;
    m.output_dir = get("output.dir", default_out);
    m.write_models = get("output.write_models", true);

    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("manifest: ") + what);
    };
    require(p.type == "knn" || p.type == "mf" || p.type == "default" || p.type == "random",
            "model.type must be knn, mf, default or random");
    require(m.scale.min < m.scale.max, "dataset.rating_min must be below dataset.rating_max");
    require(m.split_ratio > 0.0 && m.split_ratio < 1.0, "split.ratio must lie in (0, 1)");
    require(p.k >= 1, "model.k must be >= 1");
    require(p.gamma >= 1, "model.gamma must be >= 1");
    require(p.factors >= 3, "model.factors must be >= 3");
    require(p.learning_rate > 0.0, "model.learning_rate must be > 0");
    require(p.regularization >= 0.0, "model.regularization must be >= 0");
    require(p.budget_seconds > 0.0, "model.budget_seconds must be > 0");
    require(p.validation_fraction > 0.0 && p.validation_fraction < 0.5, "model.validation_fraction must lie in (0, 0.5)");
    require(p.max_epochs >= 1, "model.max_epochs must be >= 1");
    require(m.protocol.n >= 1, "protocol.n must be >= 1");
    require(m.protocol.k >= 1, "protocol.k must be >= 1");
    require(!m.output_dir.empty(), "output.dir must not be empty");
    std::error_code ec;
    if (!std::filesystem::exists(m.resolved_dataset(), ec)) {
        throw ConfigError("dataset.path does not exist: " + m.resolved_dataset().string());
    }
    return m;
}

Json manifest_json(const RunManifest& m) {
    Json j;
    j["dataset"]["path"] = m.dataset_path;
    j["dataset"]["format"] = std::string(to_string(m.format));
    j["dataset"]["rating_min"] = m.scale.min;
    j["dataset"]["rating_max"] = m.scale.max;
    j["dataset"]["discrete"] = m.scale.discrete;
    j["split"]["ratio"] = m.split_ratio;
    j["split"]["seed"] = m.split_seed;
    const auto& p = m.model;
    j["model"]["type"] = p.type;
    j["model"]["k"] = p.k;
    j["model"]["gamma"] = p.gamma;
    j["model"]["factors"] = p.factors;
    j["model"]["learning_rate"] = p.learning_rate;
    j["model"]["regularization"] = p.regularization;
    j["model"]["budget_seconds"] = p.budget_seconds;
    j["model"]["validation_fraction"] = p.validation_fraction;
    j["model"]["max_epochs"] = p.max_epochs;
    j["model"]["seed"] = p.seed;
    j["model"]["include_pinned_slots"] = p.include_pinned_slots;
    j["protocol"]["n"] = m.protocol.n;
    j["protocol"]["k"] = m.protocol.k;
    j["protocol"]["exclude_seen"] = m.protocol.exclude_seen;
    j["output"]["dir"] = m.output_dir;
    j["output"]["write_models"] = m.write_models;
    return j;
}

std::unique_ptr<Predictor> train_model(const ModelParams& params, const SplitDataset& data,
                                       const SegmentModel& segments, Json* training) {
    if (params.type == "default") return std::make_unique<DefaultPredictor>(segments, data.scale());
    if (params.type == "random") return std::make_unique<RandomPredictor>(data, params.seed);
    if (params.type == "knn") {
        return std::make_unique<KnnPredictor>(KnnPredictor::train(data, segments, KnnConfig{params.k, params.gamma}));
    }
    if (params.type == "mf") {
        MfConfig config;
        config.factors = params.factors;
        config.learning_rate = params.learning_rate;
        config.regularization = params.regularization;
        config.budget_seconds = params.budget_seconds;
        config.validation_fraction = params.validation_fraction;
        config.max_epochs = params.max_epochs;
        config.seed = params.seed;
        auto model = train_mf(data, config);
        if (training) {
            Json epochs = Json::array();
            for (const auto& e : model.training_log) {
                epochs.push_back(Json{{"epoch", e.epoch}, {"validation_rmse", e.validation_rmse},
                                      {"elapsed_seconds", e.elapsed_seconds}});
            }
            (*training)["best_epoch"] = model.best_epoch;
            (*training)["stop_reason"] = std::string(to_string(model.stop_reason));
            (*training)["epochs"] = std::move(epochs);
        }
        return std::make_unique<MfPredictor>(std::move(model), data, segments, params.include_pinned_slots);
    }
    throw ConfigError("unknown model type '" + params.type + "'");
}

RunResult execute_run(const RunManifest& m, std::ostream* progress) {
    auto say = [&](const std::string& s) {
        if (progress) *progress << s << std::endl;
    };
    using Clock = std::chrono::steady_clock;
    RunResult result;
    auto& report = result.report;
    report.model = m.model.type;
    report.configuration = manifest_json(m);

    say("loading " + m.resolved_dataset().string());
    const auto loaded = load_dataset(m.resolved_dataset(), m.format, m.scale);
    if (loaded.logs.empty()) throw DatasetError("dataset is empty: " + m.resolved_dataset().string());
    const auto data = split(loaded.logs, m.split_ratio, m.split_seed, m.scale);
    if (data.test().empty()) throw DatasetError("test set is empty after the split");
    const auto segments = build_segment_model(data);
    report.dataset = Json{{"logs", loaded.logs.size()},
                          {"duplicates_dropped", loaded.duplicates_dropped},
                          {"train_logs", data.train().size()},
                          {"test_logs", data.test().size()},
                          {"users", data.users().size()},
                          {"items", data.catalog_size()},
                          {"user_threshold", segments.user_threshold},
                          {"item_threshold", segments.item_threshold},
                          {"global_mean", segments.global_mean},
                          {"rating_min", m.scale.min},
                          {"rating_max", m.scale.max},
                          {"discrete", m.scale.discrete}};

    say("training " + m.model.type);
    auto t0 = Clock::now();
    const auto model = as_training([&] { return train_model(m.model, data, segments, &report.training); });
    report.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    say("running decide / compare / discover");
    auto core = as_evaluation([&] { return run_core(*model, data, segments, m.protocol); });
    report.core = std::move(core.table);
    report.core_timings = core.timings;

    say("running explore");
    const auto kernel = as_evaluation([&] { return model->item_similarity_matrix(m.protocol.k); });
    if (kernel) {
        auto explore = as_evaluation([&] { return run_explore_with(*kernel, data, segments, m.protocol); });
        report.explore = std::move(explore.table);
        report.explore_timings = explore.timings;
        report.explore_kernel = m.model.type == "knn" ? "native weighted-Pearson kernel"
                                                      : "Pearson over " + m.model.type + " item factors";
    }

    const auto out_dir = m.resolved_output();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw EvaluationError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    auto& files = result.files;
    write_text(out_dir / "report.json", report_json(report).dump(2) + "\n", files);
    write_text(out_dir / "metadata.json", metadata_json(report).dump(2) + "\n", files);
    write_text(out_dir / "core_metrics.csv", to_csv(report.core), files);
    if (report.explore) write_text(out_dir / "explore_metrics.csv", to_csv(*report.explore), files);
    write_text(out_dir / "summary.txt", render_summary(report), files);
    if (m.write_models) {
        if (const auto* knn = dynamic_cast<const KnnPredictor*>(model.get())) {
            save_similarity(out_dir / "similarity.csv", knn->matrix(), data.items());
            files.push_back(out_dir / "similarity.csv");
        }
        if (const auto* mf = dynamic_cast<const MfPredictor*>(model.get())) {
            save_factor_model(out_dir / "factors.txt", mf->model());
            files.push_back(out_dir / "factors.txt");
        }
        if (kernel) {
            save_similarity(out_dir / "explore_kernel.csv", *kernel, data.items());
            files.push_back(out_dir / "explore_kernel.csv");
        }
    }
    say("wrote " + std::to_string(files.size()) + " files to " + out_dir.string());
    return result;
}

}  // namespace recoeval
