// recoeval: run the four-function evaluation protocol from a manifest, compare
// reports, and generate synthetic rating fixtures.
//
//   recoeval run manifest.json [--model.type knn] [--seed 7] [--output out/]
//   recoeval compare a/report.json b/report.json
//   recoeval gen-fixture --kind lowrank --users 500 --items 200 --out data.csv
//
// Exit status: 0 ok, 2 manifest/usage, 3 dataset, 4 training, 5 evaluation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "recoeval/fixtures.hpp"
#include "recoeval/run.hpp"

namespace {

using namespace recoeval;

enum Exit { kOk = 0, kManifest = 2, kDataset = 3, kTraining = 4, kEvaluation = 5 };

std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "recoeval-out";
}

int cmd_run(const std::filesystem::path& manifest_path, const std::map<std::string, std::string>& overrides,
            const std::optional<std::uint64_t>& seed, bool quiet) {
    Json j = read_manifest_file(manifest_path);
    for (const auto& [key, value] : overrides) apply_override(j, key, value);
    if (seed) {
        apply_override(j, "split.seed", std::to_string(*seed));
        apply_override(j, "model.seed", std::to_string(*seed));
    }
    auto base = manifest_path.parent_path();
    if (base.empty()) base = ".";
    const auto manifest = parse_manifest(j, base);
    const auto result = execute_run(manifest, quiet ? nullptr : &std::cerr);
    std::cout << render_summary(result.report);
    return kOk;
}

int cmd_compare(const std::vector<std::string>& paths) {
    std::vector<Json> reports;
    std::vector<std::string> labels;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw EvaluationError("cannot read report " + p);
        try {
            reports.push_back(Json::parse(in));
        } catch (const Json::exception& e) {
            throw EvaluationError("report " + p + " is not valid JSON: " + e.what());
        }
        const auto& r = reports.back();
        labels.push_back(r.contains("model") && r["model"].is_string() ? r["model"].get<std::string>() : p);
    }
    // Two runs of the same model type would share a label.
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
        for (std::size_t k = 0; k < labels.size(); ++k) labels[k] += "#" + std::to_string(k + 1);
    }
    std::cout << compare_reports(reports, labels);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-function (decide/compare/explore/discover) evaluation of rating-based recommenders"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Seed override: split and model seeds for run, generator seed for gen-fixture");

    auto* run = app.add_subcommand("run", "Train a model and evaluate it as described by a manifest");
    std::string manifest_path;
    run->add_option("manifest", manifest_path, "Manifest file (JSON)")->required();
    std::optional<std::string> output;
    run->add_option("--output,-o", output, "Output directory (same as --output.dir)");
    bool quiet = false;
    run->add_flag("--quiet,-q", quiet, "No progress on stderr");
    std::map<std::string, std::string> overrides;
    std::vector<std::pair<std::string, std::optional<std::string>>> flag_values;
    flag_values.reserve(manifest_keys().size());
    for (const auto& key : manifest_keys()) {
        auto& slot = flag_values.emplace_back(std::string(key.key), std::nullopt);
        run->add_option("--" + std::string(key.key), slot.second, std::string(key.help))->group("Manifest keys");
    }

    auto* compare = app.add_subcommand("compare", "Side-by-side table of report.json files");
    std::vector<std::string> report_paths;
    compare->add_option("reports", report_paths, "report.json files")->required();

    auto* gen = app.add_subcommand("gen-fixture", "Write a synthetic rating fixture as CSV");
    FixtureSpec spec;
    std::string kind = "lowrank";
    std::optional<std::string> out_path;
    gen->add_option("--kind", kind, "lowrank | rank1 | uniform | two-cluster | clustered")->capture_default_str();
    gen->add_option("--users", spec.users, "User count")->capture_default_str();
    gen->add_option("--items", spec.items, "Item count")->capture_default_str();
    gen->add_option("--density", spec.density, "Observed share of the user x item grid")->capture_default_str();
    gen->add_option("--rank", spec.rank, "Planted rank (lowrank)")->capture_default_str();
    gen->add_option("--noise", spec.noise, "Rating noise std-dev (lowrank, clustered)")->capture_default_str();
    gen->add_option("--clusters", spec.clusters, "Item clusters (clustered)")->capture_default_str();
    gen->add_option("--skew", spec.skew, "Popularity/activity skew (lowrank, clustered)")->capture_default_str();
    gen->add_option("--rating-min", spec.scale.min, "Lowest rating")->capture_default_str();
    gen->add_option("--rating-max", spec.scale.max, "Highest rating")->capture_default_str();
    gen->add_option("--out", out_path, "CSV path (default: <output dir>/fixture-<kind>.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kManifest;
    }

    try {
        if (*run) {
            for (const auto& [key, value] : flag_values) {
                if (value) overrides[key] = *value;
            }
            if (output) overrides["output.dir"] = *output;
            return cmd_run(manifest_path, overrides, seed, quiet);
        }
        if (*compare) return cmd_compare(report_paths);
        if (*gen) {
            spec.kind = parse_fixture_kind(kind);
            if (seed) spec.seed = *seed;
            const auto logs = generate_fixture(spec);
            const std::filesystem::path path =
                out_path ? std::filesystem::path(*out_path)
                         : default_output_dir() / ("fixture-" + std::string(to_string(spec.kind)) + ".csv");
            if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
            write_csv(path, logs);
            std::cerr << "wrote " << logs.size() << " logs to " << path.string() << '\n';
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "manifest error: " << e.what() << '\n';
        return kManifest;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return kDataset;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return kTraining;
    } catch (const EvaluationError& e) {
        std::cerr << "evaluation error: " << e.what() << '\n';
        return kEvaluation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kEvaluation;
    }
    return kOk;
}
