#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "recoeval/baselines.hpp"
#include "recoeval/fixtures.hpp"
#include "recoeval/knn.hpp"
#include "recoeval/mf.hpp"
#include "recoeval/protocol.hpp"
#include "recoeval/run.hpp"

namespace py = pybind11;
using namespace recoeval;

namespace {

using LogTuple = std::tuple<std::string, std::string, double>;

std::vector<RatingLog> to_logs(const std::vector<LogTuple>& rows) {
    std::vector<RatingLog> out;
    out.reserve(rows.size());
    for (const auto& [u, i, r] : rows) out.push_back({u, i, r, std::nullopt});
    return out;
}

std::vector<LogTuple> to_tuples(const std::vector<RatingLog>& logs) {
    std::vector<LogTuple> out;
    out.reserve(logs.size());
    for (const auto& l : logs) out.emplace_back(l.user_id, l.item_id, l.rating);
    return out;
}

// A split together with its train statistics.
struct Dataset {
    std::shared_ptr<const SplitDataset> data;
    std::shared_ptr<const SegmentModel> segments;

    explicit Dataset(SplitDataset d)
        : data(std::make_shared<const SplitDataset>(std::move(d))),
          segments(std::make_shared<const SegmentModel>(build_segment_model(*data))) {}

    Index user(const std::string& id) const {
        const auto u = data->users().find(id);
        if (!u) throw py::key_error("unknown user '" + id + "'");
        return *u;
    }
    Index item(const std::string& id) const {
        const auto i = data->items().find(id);
        if (!i) throw py::key_error("unknown item '" + id + "'");
        return *i;
    }
};

struct Model {
    std::shared_ptr<const Predictor> predictor;
    Dataset dataset;  // keeps the indices the model was trained against alive
    std::string training_json;
};

ModelParams params_from(const std::string& type, const py::kwargs& kw) {
    ModelParams p;
    p.type = type;
    for (const auto& [k, v] : kw) {
        const auto key = py::cast<std::string>(k);
        if (key == "k") p.k = py::cast<std::size_t>(v);
        else if (key == "gamma") p.gamma = py::cast<std::size_t>(v);
        else if (key == "factors") p.factors = py::cast<std::size_t>(v);
        else if (key == "learning_rate") p.learning_rate = py::cast<double>(v);
        else if (key == "regularization") p.regularization = py::cast<double>(v);
        else if (key == "budget_seconds") p.budget_seconds = py::cast<double>(v);
        else if (key == "validation_fraction") p.validation_fraction = py::cast<double>(v);
        else if (key == "max_epochs") p.max_epochs = py::cast<std::size_t>(v);
        else if (key == "seed") p.seed = py::cast<std::uint64_t>(v);
        else if (key == "include_pinned_slots") p.include_pinned_slots = py::cast<bool>(v);
        else throw ConfigError("unknown model parameter '" + key + "'");
    }
    return p;
}

}  // namespace

PYBIND11_MODULE(_recoeval, m) {
    m.doc() = "Segment-wise offline evaluation of rating-based recommenders";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);

    py::class_<RatingScale>(m, "RatingScale")
        .def(py::init([](double lo, double hi, bool discrete) { return RatingScale{lo, hi, discrete}; }),
             py::arg("min") = 1.0, py::arg("max") = 5.0, py::arg("discrete") = true)
        .def_readwrite("min", &RatingScale::min)
        .def_readwrite("max", &RatingScale::max)
        .def_readwrite("discrete", &RatingScale::discrete);

    m.def(
        "load_dataset",
        [](const std::string& path, const std::string& format, const RatingScale& scale) {
            return to_tuples(load_dataset(path, parse_dataset_format(format), scale).logs);
        },
        py::arg("path"), py::arg("format") = "csv", py::arg("scale") = RatingScale{},
        "Rating logs as (user_id, item_id, rating) tuples.");

    m.def(
        "generate_fixture",
        [](const std::string& kind, std::size_t users, std::size_t items, double density, std::uint64_t seed,
           std::size_t rank, double noise, std::size_t clusters, double skew) {
            FixtureSpec s;
            s.kind = parse_fixture_kind(kind);
            s.users = users;
            s.items = items;
            s.density = density;
            s.seed = seed;
            s.rank = rank;
            s.noise = noise;
            s.clusters = clusters;
            s.skew = skew;
            return to_tuples(generate_fixture(s));
        },
        py::arg("kind") = "lowrank", py::arg("users") = 500, py::arg("items") = 200, py::arg("density") = 0.05,
        py::arg("seed") = 1, py::arg("rank") = 3, py::arg("noise") = 0.4, py::arg("clusters") = 5,
        py::arg("skew") = 1.0);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](const std::vector<LogTuple>& train, const std::vector<LogTuple>& test,
                         const RatingScale& scale) {
                 return Dataset(SplitDataset(to_logs(train), to_logs(test), scale));
             }),
             py::arg("train"), py::arg("test"), py::arg("scale") = RatingScale{})
        .def_static(
            "split",
            [](const std::vector<LogTuple>& logs, double ratio, std::uint64_t seed, const RatingScale& scale) {
                const auto l = to_logs(logs);
                return Dataset(split(l, ratio, seed, scale));
            },
            py::arg("logs"), py::arg("ratio") = 0.9, py::arg("seed") = 42, py::arg("scale") = RatingScale{})
        .def_property_readonly("train", [](const Dataset& d) { return to_tuples(d.data->train_logs()); })
        .def_property_readonly("test", [](const Dataset& d) { return to_tuples(d.data->test_logs()); })
        .def_property_readonly("users", [](const Dataset& d) { return d.data->users().ids(); })
        .def_property_readonly("items", [](const Dataset& d) { return d.data->items().ids(); })
        .def_property_readonly("catalog_size", [](const Dataset& d) { return d.data->catalog_size(); })
        .def_property_readonly("user_threshold", [](const Dataset& d) { return d.segments->user_threshold; })
        .def_property_readonly("item_threshold", [](const Dataset& d) { return d.segments->item_threshold; })
        .def_property_readonly("global_mean", [](const Dataset& d) { return d.segments->global_mean; })
        .def(
            "segment",
            [](const Dataset& d, const std::string& user, const std::string& item) {
                const auto u = d.data->users().find(user);
                const auto i = d.data->items().find(item);
                return std::string(to_string(segment_of(*d.segments, u.value_or(kNoIndex), i.value_or(kNoIndex))));
            },
            py::arg("user_id"), py::arg("item_id"));

    py::class_<Model>(m, "Model")
        .def_property_readonly("name", [](const Model& mo) { return mo.predictor->name(); })
        .def(
            "predict",
            [](const Model& mo, const std::string& user, const std::string& item) {
                return mo.predictor->predict(mo.dataset.user(user), mo.dataset.item(item));
            },
            py::arg("user_id"), py::arg("item_id"))
        .def(
            "recommend",
            [](const Model& mo, const std::string& user, std::size_t n, bool exclude_seen) {
                const auto& d = *mo.dataset.data;
                const Index u = mo.dataset.user(user);
                std::vector<std::string> out;
                for (const auto i : generate_top_n(*mo.predictor, u, candidate_items(d, u, exclude_seen), n)) {
                    out.push_back(d.items().id(i));
                }
                return out;
            },
            py::arg("user_id"), py::arg("n") = 10, py::arg("exclude_seen") = true)
        .def(
            "neighbors",
            [](const Model& mo, const std::string& item, std::size_t k) {
                std::vector<std::pair<std::string, double>> out;
                py::gil_scoped_release release;
                const auto kernel = mo.predictor->item_similarity_matrix(k);
                if (!kernel) return out;
                for (const auto& nb : kernel->neighbors(mo.dataset.item(item))) {
                    out.emplace_back(mo.dataset.data->items().id(nb.item), nb.weight);
                }
                return out;
            },
            py::arg("item_id"), py::arg("k") = 100)
        .def_property_readonly("training_json", [](const Model& mo) { return mo.training_json; });

    m.def(
        "train",
        [](const Dataset& d, const std::string& type, const py::kwargs& kw) {
            const auto params = params_from(type, kw);
            Json training = Json::object();
            std::unique_ptr<Predictor> p;
            {
                py::gil_scoped_release release;
                p = train_model(params, *d.data, *d.segments, &training);
            }
            return Model{std::shared_ptr<const Predictor>(std::move(p)), d, training.dump()};
        },
        py::arg("dataset"), py::arg("type"), "Trains knn | mf | default | random; keyword hyperparameters.");

    m.def(
        "evaluate_json",
        [](const Model& mo, std::size_t n, std::size_t k, bool exclude_seen, bool explore) {
            ProtocolConfig config;
            config.n = n;
            config.k = k;
            config.exclude_seen = exclude_seen;
            Json out;
            py::gil_scoped_release release;
            const auto& d = *mo.dataset.data;
            const auto& s = *mo.dataset.segments;
            out["core"] = table_json(run_core(*mo.predictor, d, s, config).table);
            if (explore) {
                const auto e = run_explore(*mo.predictor, d, s, config);
                out["explore"] = e ? table_json(e->table) : Json(nullptr);
            }
            return out.dump();
        },
        py::arg("model"), py::arg("n") = 10, py::arg("k") = 100, py::arg("exclude_seen") = true,
        py::arg("explore") = true);

    m.def(
        "run_manifest_json",
        [](const std::string& manifest_json, const std::string& base_dir,
           const std::vector<std::pair<std::string, std::string>>& overrides) {
            Json j;
            try {
                j = Json::parse(manifest_json);
            } catch (const Json::exception& e) {
                throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
            }
            for (const auto& [k, v] : overrides) apply_override(j, k, v);
            const auto manifest = parse_manifest(j, base_dir);
            py::gil_scoped_release release;
            return report_json(execute_run(manifest).report).dump();
        },
        py::arg("manifest_json"), py::arg("base_dir") = ".",
        py::arg("overrides") = std::vector<std::pair<std::string, std::string>>{});

    m.def(
        "compare_reports_json",
        [](const std::vector<std::string>& reports, const std::vector<std::string>& labels) {
            std::vector<Json> docs;
            for (const auto& r : reports) docs.push_back(Json::parse(r));
            return compare_reports(docs, labels);
        },
        py::arg("reports"), py::arg("labels"));

    m.def(
        "weighted_pearson",
        [](const std::vector<double>& a, const std::vector<double>& b, std::size_t gamma) {
            if (a.size() != b.size()) throw py::value_error("vectors of common raters must have equal length");
            std::vector<Index> users(a.size());
            for (std::size_t k = 0; k < users.size(); ++k) users[k] = static_cast<Index>(k);
            return weighted_pearson(users, a, users, b, gamma);
        },
        py::arg("a"), py::arg("b"), py::arg("gamma") = 50, "Similarity of two rating vectors over the same raters.");

    m.def(
        "comp_user",
        [](const std::vector<std::pair<double, double>>& truth_pred) {
            std::vector<RatedPair> p;
            for (const auto& [t, r] : truth_pred) p.push_back({t, r});
            const auto c = comp_user(p);
            return std::make_pair(c.compatible, c.counted);
        },
        py::arg("truth_and_prediction"));

    m.def(
        "ami_user",
        [](const std::vector<std::pair<double, std::size_t>>& evaluable, double user_mean, std::size_t catalog_size) {
            std::vector<RecommendationOutcome> o;
            for (const auto& [r, count] : evaluable) {
                RecommendationOutcome x;
                x.true_rating = r;
                x.user_mean = user_mean;
                x.item_count = count;
                x.catalog_size = catalog_size;
                o.push_back(x);
            }
            return ami_user(o);
        },
        py::arg("ratings_and_counts"), py::arg("user_mean"), py::arg("catalog_size"));

    m.def(
        "precision_user",
        [](const std::vector<double>& evaluable_ratings, double user_mean) {
            std::vector<RecommendationOutcome> o;
            for (double r : evaluable_ratings) {
                RecommendationOutcome x;
                x.true_rating = r;
                x.user_mean = user_mean;
                o.push_back(x);
            }
            return precision_user(o);
        },
        py::arg("evaluable_ratings"), py::arg("user_mean"));
}
