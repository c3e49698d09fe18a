#include "recoeval/report.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <sstream>

namespace recoeval {

namespace {

constexpr std::array<std::string_view, 5> kColumns = {"HuserPitem", "LuserPitem", "HuserUitem", "LuserUitem", "Global"};

struct RowSpec {
    std::string_view function;
    std::string_view metric;
};
constexpr std::array<RowSpec, 5> kRows = {{{"Decide", "RMSE"},
                                           {"Compare", "COMP"},
                                           {"Compare", "COMP_micro"},
                                           {"Discover", "Precision"},
                                           {"Discover", "AMI"}}};

Json entry_json(const MetricEntry& e) {
    Json j;
    j["function"] = e.function;
    j["metric"] = e.metric;
    j["segment"] = e.segment;
    j["value"] = e.value ? Json(*e.value) : Json(nullptr);
    j["support"] = e.support;
    return j;
}

Json timings_json(const PhaseTimings& t) {
    Json j;
    j["decide_seconds"] = t.decide_seconds;
    j["compare_seconds"] = t.compare_seconds;
    j["discover_seconds"] = t.discover_seconds;
    return j;
}

std::string format_value(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    const std::string fill(width - s.size(), ' ');
    return left ? s + fill : fill + s;
}

// Column of a table cell: COMP cells map from their user class to both item columns.
std::vector<std::size_t> columns_for(std::string_view segment) {
    if (segment == "Huser") return {0, 2};
    if (segment == "Luser") return {1, 3};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        if (kColumns[c] == segment) return {c};
    }
    return {};
}

}  // namespace

Json table_json(const MetricTable& table) {
    Json out;
    out["decide"] = Json::array();
    out["compare"] = Json::array();
    out["discover"] = Json::array();
    for (const auto& e : table.entries) {
        const std::string key = e.function == "Decide" ? "decide" : e.function == "Compare" ? "compare" : "discover";
        out[key].push_back(entry_json(e));
    }
    out["ami_excluded"] = table.ami_excluded;
    return out;
}

MetricTable table_from_json(const Json& sections) {
    MetricTable t;
    for (const char* key : {"decide", "compare", "discover"}) {
        if (!sections.contains(key)) throw EvaluationError(std::string("report section '") + key + "' missing");
        for (const auto& j : sections.at(key)) {
            MetricEntry e;
            e.function = j.at("function").get<std::string>();
            e.metric = j.at("metric").get<std::string>();
            e.segment = j.at("segment").get<std::string>();
            if (!j.at("value").is_null()) e.value = j.at("value").get<double>();
            e.support = j.at("support").get<std::size_t>();
            t.entries.push_back(std::move(e));
        }
    }
    t.ami_excluded = sections.value("ami_excluded", std::size_t{0});
    return t;
}

Json report_json(const EvaluationReport& r) {
    Json j;
    j["model"] = r.model;
    j["configuration"] = r.configuration;
    j["dataset"] = r.dataset;
    j["core"] = table_json(r.core);
    if (r.explore) {
        Json e = table_json(*r.explore);
        e["kernel"] = r.explore_kernel;
        j["explore"] = std::move(e);
    } else {
        j["explore"] = nullptr;
    }
    return j;
}

Json metadata_json(const EvaluationReport& r) {
    Json j;
    j["train_seconds"] = r.train_seconds;
    j["core_timings"] = timings_json(r.core_timings);
    j["explore_timings"] = r.explore_timings ? timings_json(*r.explore_timings) : Json(nullptr);
    j["training"] = r.training;
    return j;
}

std::string render_table(const MetricTable& table) {
    std::ostringstream out;
    out << pad("", 22, true);
    for (const auto c : kColumns) out << pad(std::string(c), 12);
    out << '\n';
    for (const auto& row : kRows) {
        std::array<std::string, 5> values;
        values.fill("");
        std::array<std::string, 5> supports;
        supports.fill("");
        for (const auto& e : table.entries) {
            if (e.function != row.function || e.metric != row.metric) continue;
            for (const auto c : columns_for(e.segment)) {
                values[c] = format_value(e.value);
                supports[c] = "n=" + std::to_string(e.support);
            }
        }
        out << pad(std::string(row.function), 10, true) << pad(std::string(row.metric), 12, true);
        for (const auto& v : values) out << pad(v, 12);
        out << '\n' << pad("", 22, true);
        for (const auto& s : supports) out << pad(s, 12);
        out << '\n';
    }
    if (table.ami_excluded > 0) {
        out << "note: " << table.ami_excluded << " evaluable outcome(s) excluded from AMI (item absent from train)\n";
    }
    return out.str();
}

std::string render_summary(const EvaluationReport& r) {
    std::ostringstream out;
    out << "model: " << r.model << '\n';
    if (r.dataset.contains("train_logs")) {
        out << "train logs: " << r.dataset["train_logs"].dump() << ", test logs: " << r.dataset["test_logs"].dump()
            << ", users: " << r.dataset["users"].dump() << ", items: " << r.dataset["items"].dump() << '\n';
    }
    out << "\n[Decide / Compare / Discover]\n" << render_table(r.core);
    out << "\n[Explore]\n";
    if (r.explore) {
        out << "kernel: " << r.explore_kernel << '\n' << render_table(*r.explore);
    } else {
        out << "absent: model exposes no item-item similarity\n";
    }
    return out.str();
}

std::string compare_reports(const std::vector<Json>& reports, const std::vector<std::string>& labels) {
    if (reports.empty()) throw EvaluationError("no report to compare");
    if (labels.size() != reports.size()) throw std::invalid_argument("one label per report required");

    auto scale_of = [](const Json& r) {
        const auto& d = r.at("dataset");
        return std::make_tuple(d.at("rating_min").get<double>(), d.at("rating_max").get<double>(),
                               d.at("discrete").get<bool>());
    };
    struct Loaded {
        MetricTable core;
        std::optional<MetricTable> explore;
    };
    std::vector<Loaded> loaded;
    try {
        for (const auto& r : reports) {
            auto& l = loaded.emplace_back();
            l.core = table_from_json(r.at("core"));
            if (r.contains("explore") && !r.at("explore").is_null()) l.explore.emplace(table_from_json(r.at("explore")));
        }
        for (std::size_t k = 1; k < reports.size(); ++k) {
            if (scale_of(reports[k]) != scale_of(reports[0])) {
                throw EvaluationError("incompatible reports: rating scales differ ('" + labels[0] + "' vs '" + labels[k] +
                                      "')");
            }
        }
    } catch (const Json::exception& e) {
        throw EvaluationError(std::string("malformed report: ") + e.what());
    }
    auto keys = [](const MetricTable& t) {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& e : t.entries) out.emplace_back(e.function, e.metric, e.segment);
        return out;
    };
    for (std::size_t k = 1; k < loaded.size(); ++k) {
        if (keys(loaded[k].core) != keys(loaded[0].core)) {
            throw EvaluationError("incompatible reports: segment schemes differ ('" + labels[0] + "' vs '" + labels[k] +
                                  "')");
        }
    }

    const bool mark = reports.size() > 1;
    std::ostringstream out;
    out << pad("function", 18, true) << pad("metric", 12, true) << pad("segment", 12, true);
    for (const auto& l : labels) out << pad(l, 14);
    out << '\n';
    auto emit = [&](const std::string& function, const MetricEntry& ref, auto&& value_of) {
        std::vector<std::optional<double>> values;
        for (std::size_t k = 0; k < loaded.size(); ++k) values.push_back(value_of(k));
        const bool lower_better = ref.metric == "RMSE";
        std::optional<double> best;
        for (const auto& v : values) {
            if (v && (!best || (lower_better ? *v < *best : *v > *best))) best = v;
        }
        out << pad(function, 18, true) << pad(ref.metric, 12, true) << pad(ref.segment, 12, true);
        for (const auto& v : values) {
            std::string cell = format_value(v);
            if (mark && v && best && *v == *best) cell += '*';
            out << pad(cell, 14);
        }
        out << '\n';
    };
    const auto& reference = loaded[0].core.entries;
    for (std::size_t row = 0; row < reference.size(); ++row) {
        emit(reference[row].function, reference[row], [&](std::size_t k) { return loaded[k].core.entries[row].value; });
    }
    bool any_explore = false;
    for (const auto& l : loaded) any_explore = any_explore || l.explore.has_value();
    if (any_explore) {
        for (std::size_t row = 0; row < reference.size(); ++row) {
            emit("Explore/" + reference[row].function, reference[row], [&](std::size_t k) -> std::optional<double> {
                if (!loaded[k].explore) return std::nullopt;
                const auto* e = loaded[k].explore->find(reference[row].metric, reference[row].segment);
                return e ? e->value : std::nullopt;
            });
        }
    }
    return out.str();
}

}  // namespace recoeval
