#include "recoeval/mf.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "parallel.hpp"
#include "recoeval/baselines.hpp"
#include "rng.hpp"

namespace recoeval {

namespace {

std::optional<std::size_t> find_sorted(const std::vector<std::string>& ids, std::string_view id) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), id,
                                     [](const std::string& a, std::string_view b) { return id_less(a, b); });
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
    return s;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(StopReason r) noexcept {
    switch (r) {
        case StopReason::ValidationIncrease: return "validation_increase";
        case StopReason::Budget: return "budget";
        case StopReason::MaxEpochs: return "max_epochs";
    }
    return "?";
}

std::optional<std::size_t> FactorModel::user_row(std::string_view id) const { return find_sorted(user_ids, id); }
std::optional<std::size_t> FactorModel::item_row(std::string_view id) const { return find_sorted(item_ids, id); }

double FactorModel::score(std::size_t user_row, std::size_t item_row) const {
    return dot(user_vector(user_row), item_vector(item_row));
}

bool FactorModel::same_parameters(const FactorModel& o) const {
    return factors == o.factors && learning_rate == o.learning_rate && regularization == o.regularization &&
           validation_fraction == o.validation_fraction && seed == o.seed && best_epoch == o.best_epoch &&
           user_ids == o.user_ids && item_ids == o.item_ids && user_factors == o.user_factors &&
           item_factors == o.item_factors;
}

void sgd_update(std::span<double> user, std::span<double> item, double rating, double learning_rate,
                double regularization) {
    const double e = rating - dot(user, item);
    for (std::size_t f = 0; f < user.size(); ++f) {
        const double pf = user[f];
        const double qf = item[f];
        if (f != kUserPinnedSlot) user[f] = pf + learning_rate * (e * qf - regularization * pf);
        if (f != kItemPinnedSlot) item[f] = qf + learning_rate * (e * pf - regularization * qf);
    }
}

FactorModel train_mf(const SplitDataset& data, const MfConfig& config) {
    if (config.factors < 3) throw TrainingError("MF needs at least 3 factors (two bias slots + one free factor)");
    if (!(config.validation_fraction > 0.0 && config.validation_fraction < 0.5)) {
        throw TrainingError("validation_fraction must lie in (0, 0.5)");
    }
    if (!(config.budget_seconds > 0.0)) throw TrainingError("training budget must be positive");
    if (!(config.learning_rate > 0.0) || config.regularization < 0.0) {
        throw TrainingError("learning_rate must be positive and regularization non-negative");
    }
    const auto train = data.train();
    if (train.empty()) throw TrainingError("cannot train MF on an empty train set");

    const auto start = std::chrono::steady_clock::now();
    const std::size_t F = config.factors;
    FactorModel model;
    model.factors = F;
    model.learning_rate = config.learning_rate;
    model.regularization = config.regularization;
    model.validation_fraction = config.validation_fraction;
    model.seed = config.seed;

    // Rows cover entities present in train only, in id order, so the model never
    // depends on which test-only ids exist.
    std::vector<Index> user_row(data.users().size(), kNoIndex);
    std::vector<Index> item_row(data.items().size(), kNoIndex);
    for (Index u = 0; u < data.users().size(); ++u) {
        if (data.train_by_user().row_size(u) == 0) continue;
        user_row[u] = static_cast<Index>(model.user_ids.size());
        model.user_ids.push_back(data.users().id(u));
    }
    for (Index i = 0; i < data.items().size(); ++i) {
        if (data.train_by_item().row_size(i) == 0) continue;
        item_row[i] = static_cast<Index>(model.item_ids.size());
        model.item_ids.push_back(data.items().id(i));
    }

    std::mt19937_64 gen(config.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    detail::shuffle(order.begin(), order.end(), gen);
    const auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(train.size())));
    if (n_val == 0) throw TrainingError("validation set is empty after the split; use more data or a larger fraction");
    std::vector<std::size_t> validation(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(validation.begin(), validation.end());
    std::sort(fit.begin(), fit.end());

    model.user_factors.resize(model.user_ids.size() * F);
    model.item_factors.resize(model.item_ids.size() * F);
    for (std::size_t r = 0; r < model.user_ids.size(); ++r) {
        for (std::size_t f = 0; f < F; ++f) {
            model.user_factors[r * F + f] =
                f == kUserPinnedSlot ? 1.0 : detail::uniform(gen, -config.init_range, config.init_range);
        }
    }
    for (std::size_t r = 0; r < model.item_ids.size(); ++r) {
        for (std::size_t f = 0; f < F; ++f) {
            model.item_factors[r * F + f] =
                f == kItemPinnedSlot ? 1.0 : detail::uniform(gen, -config.init_range, config.init_range);
        }
    }

    const auto& scale = data.scale();
    auto validation_rmse = [&] {
        double s = 0.0;
        for (const auto k : validation) {
            const auto& r = train[k];
            const double e = r.value - scale.clamp(model.score(user_row[r.user], item_row[r.item]));
            s += e * e;
        }
        return std::sqrt(s / static_cast<double>(validation.size()));
    };

    // Best epoch so far, and the last epoch that was not an increase.
    std::vector<double> best_users = model.user_factors;
    std::vector<double> best_items = model.item_factors;
    std::size_t best_epoch = 0;
    std::vector<double> anchor_users = model.user_factors;
    std::vector<double> anchor_items = model.item_factors;
    std::size_t anchor_epoch = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    double previous = std::numeric_limits<double>::infinity();
    std::size_t increases = 0;
    model.stop_reason = StopReason::MaxEpochs;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        detail::shuffle(fit.begin(), fit.end(), gen);
        for (const auto k : fit) {
            const auto& r = train[k];
            std::span<double> p(model.user_factors.data() + static_cast<std::size_t>(user_row[r.user]) * F, F);
            std::span<double> q(model.item_factors.data() + static_cast<std::size_t>(item_row[r.item]) * F, F);
            sgd_update(p, q, r.value, config.learning_rate, config.regularization);
        }
        for (std::size_t r = 0; r < model.user_ids.size(); ++r) {
            if (model.user_factors[r * F + kUserPinnedSlot] != 1.0) throw TrainingError("user bias slot moved");
        }
        for (std::size_t r = 0; r < model.item_ids.size(); ++r) {
            if (model.item_factors[r * F + kItemPinnedSlot] != 1.0) throw TrainingError("item bias slot moved");
        }
        if (config.on_epoch) config.on_epoch(model, epoch);
        const double rmse = validation_rmse();
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        model.training_log.push_back(EpochRecord{epoch, rmse, elapsed});
        if (!std::isfinite(rmse)) throw TrainingError("MF diverged (non-finite validation RMSE)");
        if (rmse < best_rmse) {
            best_rmse = rmse;
            best_users = model.user_factors;
            best_items = model.item_factors;
            best_epoch = epoch;
        }
        increases = rmse > previous ? increases + 1 : 0;
        previous = rmse;
        if (increases == 0) {
            anchor_users = model.user_factors;
            anchor_items = model.item_factors;
            anchor_epoch = epoch;
        }
        if (increases >= 3) {
            model.stop_reason = StopReason::ValidationIncrease;
            break;
        }
        if (elapsed >= config.budget_seconds) {
            model.stop_reason = StopReason::Budget;
            break;
        }
    }
    if (model.stop_reason == StopReason::ValidationIncrease) {
        model.user_factors = std::move(anchor_users);
        model.item_factors = std::move(anchor_items);
        model.best_epoch = anchor_epoch;
    } else {
        model.user_factors = std::move(best_users);
        model.item_factors = std::move(best_items);
        model.best_epoch = best_epoch;
    }
    return model;
}

SimilarityMatrix mf_item_similarity(const FactorModel& model, std::size_t k, bool include_pinned_slots) {
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    const std::size_t n = model.item_ids.size();
    const std::size_t F = model.factors;
    std::vector<std::size_t> slots;
    for (std::size_t f = 0; f < F; ++f) {
        if (include_pinned_slots || f != kItemPinnedSlot) slots.push_back(f);
    }
    const std::size_t d = slots.size();
    std::vector<double> centered(n * d);
    std::vector<double> sum_sq(n);
    std::vector<double> raw_sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = model.item_vector(i);
        double mean = 0.0;
        for (const auto f : slots) mean += v[f];
        mean /= static_cast<double>(d);
        double ss = 0.0;
        double rs = 0.0;
        for (std::size_t s = 0; s < d; ++s) {
            const double c = v[slots[s]] - mean;
            centered[i * d + s] = c;
            ss += c * c;
            rs += v[slots[s]] * v[slots[s]];
        }
        sum_sq[i] = ss;
        raw_sq[i] = rs;
    }
    auto flat = [&](std::size_t i) { return d < 2 || sum_sq[i] <= 1e-12 * raw_sq[i] || sum_sq[i] == 0.0; };

    std::vector<std::vector<Neighbor>> lists(n);
    detail::parallel_for(n, [&](std::size_t i) {
        if (flat(i)) return;
        std::vector<Neighbor> candidates;
        const double* a = centered.data() + i * d;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || flat(j)) continue;
            const double* b = centered.data() + j * d;
            double cov = 0.0;
            for (std::size_t s = 0; s < d; ++s) cov += a[s] * b[s];
            const double corr = std::clamp(cov / std::sqrt(sum_sq[i] * sum_sq[j]), -1.0, 1.0);
            if (corr > 0.0) candidates.push_back(Neighbor{static_cast<Index>(j), corr});
        }
        if (candidates.size() > k) {
            std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end(),
                              neighbor_before);
            candidates.resize(k);
        } else {
            std::sort(candidates.begin(), candidates.end(), neighbor_before);
        }
        lists[i] = std::move(candidates);
    }, 8);
    return SimilarityMatrix(k, std::move(lists));
}

void save_factor_model(const std::filesystem::path& path, const FactorModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "recoeval-factors 1\n"
        << "factors " << m.factors << '\n'
        << "learning_rate " << fmt(m.learning_rate) << '\n'
        << "regularization " << fmt(m.regularization) << '\n'
        << "validation_fraction " << fmt(m.validation_fraction) << '\n'
        << "seed " << m.seed << '\n'
        << "best_epoch " << m.best_epoch << '\n';
    auto table = [&](const char* name, const std::vector<std::string>& ids, const std::vector<double>& values) {
        out << name << ' ' << ids.size() << '\n';
        for (std::size_t r = 0; r < ids.size(); ++r) {
            out << ids[r];
            for (std::size_t f = 0; f < m.factors; ++f) out << '\t' << fmt(values[r * m.factors + f]);
            out << '\n';
        }
    };
    table("users", m.user_ids, m.user_factors);
    table("items", m.item_ids, m.item_factors);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

FactorModel load_factor_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot read factor model " + path.string());
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    auto next = [&]() -> std::string& {
        if (!std::getline(in, line)) fail("unexpected end of file");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };
    auto keyed = [&](std::string_view key) {
        const auto& l = next();
        if (!l.starts_with(key) || l.size() <= key.size() || l[key.size()] != ' ') fail("expected '" + std::string(key) + "'");
        return l.substr(key.size() + 1);
    };
    auto to_double = [&](std::string_view s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail("bad number '" + std::string(s) + "'");
        return v;
    };
    auto to_size = [&](std::string_view s) {
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail("bad integer '" + std::string(s) + "'");
        return v;
    };

    if (next() != "recoeval-factors 1") fail("not a factor model file");
    FactorModel m;
    m.factors = to_size(keyed("factors"));
    if (m.factors < 3) fail("factors must be >= 3");
    m.learning_rate = to_double(keyed("learning_rate"));
    m.regularization = to_double(keyed("regularization"));
    m.validation_fraction = to_double(keyed("validation_fraction"));
    m.seed = to_size(keyed("seed"));
    m.best_epoch = to_size(keyed("best_epoch"));
    auto table = [&](const char* name, std::vector<std::string>& ids, std::vector<double>& values) {
        const auto rows = to_size(keyed(name));
        ids.reserve(rows);
        values.reserve(rows * m.factors);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::string_view l = next();
            std::size_t pos = l.find('\t');
            if (pos == std::string_view::npos) fail("expected tab-separated factor row");
            ids.emplace_back(l.substr(0, pos));
            for (std::size_t f = 0; f < m.factors; ++f) {
                const auto end = std::min(l.find('\t', pos + 1), l.size());
                if (pos >= l.size()) fail("too few factor values");
                values.push_back(to_double(l.substr(pos + 1, end - pos - 1)));
                pos = end;
            }
            if (pos != l.size()) fail("too many factor values");
        }
        if (!std::is_sorted(ids.begin(), ids.end(), [](const auto& a, const auto& b) { return id_less(a, b); })) {
            fail(std::string(name) + " rows are not in id order");
        }
    };
    table("users", m.user_ids, m.user_factors);
    table("items", m.item_ids, m.item_factors);
    return m;
}

MfPredictor::MfPredictor(FactorModel model, const SplitDataset& data, SegmentModel stats, bool include_pinned_slots)
    : model_(std::move(model)),
      stats_(std::move(stats)),
      scale_(data.scale()),
      user_row_(data.users().size(), kNoIndex),
      item_row_(data.items().size(), kNoIndex),
      item_of_row_(model_.item_ids.size(), kNoIndex),
      catalog_size_(data.catalog_size()),
      include_pinned_slots_(include_pinned_slots) {
    for (std::size_t r = 0; r < model_.user_ids.size(); ++r) {
        if (const auto u = data.users().find(model_.user_ids[r])) user_row_[*u] = static_cast<Index>(r);
    }
    for (std::size_t r = 0; r < model_.item_ids.size(); ++r) {
        if (const auto i = data.items().find(model_.item_ids[r])) {
            item_row_[*i] = static_cast<Index>(r);
            item_of_row_[r] = *i;
        }
    }
}

double MfPredictor::predict(Index user, Index item) const {
    const Index ur = user < user_row_.size() ? user_row_[user] : kNoIndex;
    const Index ir = item < item_row_.size() ? item_row_[item] : kNoIndex;
    if (ur == kNoIndex || ir == kNoIndex) return default_predict(stats_, scale_, user, item);
    return scale_.clamp(model_.score(ur, ir));
}

std::optional<SimilarityMatrix> MfPredictor::item_similarity_matrix(std::size_t k) const {
    const auto by_row = mf_item_similarity(model_, k, include_pinned_slots_);
    // Model rows and dataset indices share id order, so the tie order carries over.
    std::vector<std::vector<Neighbor>> lists(catalog_size_);
    for (std::size_t r = 0; r < by_row.items(); ++r) {
        const Index item = item_of_row_[r];
        if (item == kNoIndex) continue;
        for (const auto& nb : by_row.neighbors(static_cast<Index>(r))) {
            const Index other = item_of_row_[nb.item];
            if (other != kNoIndex) lists[item].push_back(Neighbor{other, nb.weight});
        }
    }
    return SimilarityMatrix(k, std::move(lists));
}

}  // namespace recoeval
