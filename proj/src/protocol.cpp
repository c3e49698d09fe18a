#include "recoeval/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "parallel.hpp"
#include "recoeval/knn.hpp"

namespace recoeval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

[[noreturn]] void rethrow_for(const SplitDataset& data, Index user, Index item, const std::exception& e) {
    throw EvaluationError("model failed on (user '" + data.users().id(user) + "', item '" +
                          (item == kNoIndex ? std::string("<batch>") : data.items().id(item)) + "'): " + e.what());
}

std::vector<Index> select_top(std::span<const Index> candidates, std::span<const double> scores, std::size_t n) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : candidates[a] < candidates[b];
    };
    const std::size_t take = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
    std::vector<Index> out(take);
    for (std::size_t k = 0; k < take; ++k) out[k] = candidates[order[k]];
    return out;
}

}  // namespace

std::vector<Index> candidate_items(const SplitDataset& data, Index user, bool exclude_seen) {
    std::vector<Index> out;
    out.reserve(data.catalog_size());
    const auto seen = (exclude_seen && user < data.train_by_user().rows()) ? data.train_by_user().columns_of(user)
                                                                           : std::span<const Index>{};
    std::size_t s = 0;
    for (Index i = 0; i < data.catalog_size(); ++i) {
        while (s < seen.size() && seen[s] < i) ++s;
        if (s < seen.size() && seen[s] == i) continue;
        out.push_back(i);
    }
    return out;
}

std::vector<Index> generate_top_n(const Predictor& model, Index user, std::span<const Index> candidates,
                                  std::size_t n) {
    std::vector<double> scores(candidates.size());
    model.predict_user(user, candidates, scores);
    return select_top(candidates, scores, n);
}

CoreResult run_core(const Predictor& model, const SplitDataset& data, const SegmentModel& segments,
                    const ProtocolConfig& config) {
    if (config.n < 1) throw ConfigError("top-N size must be >= 1");
    CoreResult result;
    const auto test = data.test();

    // Decide: one prediction per test log, reused by Compare.
    auto t0 = Clock::now();
    std::vector<ScoredLog> scored(test.size());
    detail::parallel_for(test.size(), [&](std::size_t k) {
        const auto& r = test[k];
        double p = 0.0;
        try {
            p = model.predict(r.user, r.item);
        } catch (const std::exception& e) {
            rethrow_for(data, r.user, r.item, e);
        }
        scored[k] = ScoredLog{r.user, r.item, r.value, p, segment_of(segments, r.user, r.item)};
    }, 256);
    result.timings.decide_seconds = seconds_since(t0);

    // Compare: per-user pairs over the test logs.
    t0 = Clock::now();
    std::vector<std::size_t> by_user(test.size());
    std::iota(by_user.begin(), by_user.end(), std::size_t{0});
    std::stable_sort(by_user.begin(), by_user.end(),
                     [&](std::size_t a, std::size_t b) { return test[a].user < test[b].user; });
    std::vector<std::pair<std::size_t, std::size_t>> user_ranges;  // [begin, end) into by_user
    for (std::size_t g = 0; g < by_user.size();) {
        std::size_t end = g;
        while (end < by_user.size() && test[by_user[end]].user == test[by_user[g]].user) ++end;
        user_ranges.emplace_back(g, end);
        g = end;
    }
    std::vector<UserComp> comps(user_ranges.size());
    detail::parallel_for(user_ranges.size(), [&](std::size_t g) {
        const auto [begin, end] = user_ranges[g];
        std::vector<RatedPair> pairs;
        pairs.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
            pairs.push_back(RatedPair{scored[by_user[k]].true_rating, scored[by_user[k]].predicted_rating});
        }
        const Index user = test[by_user[begin]].user;
        comps[g] = UserComp{user, segments.user_class(user), comp_user(pairs)};
    });
    result.timings.compare_seconds = seconds_since(t0);

    // Discover: top-N over the catalog. Users without test logs cannot produce an
    // evaluable recommendation, so only users with test logs are scored.
    t0 = Clock::now();
    const auto& test_rows = data.test_by_user();
    std::vector<std::vector<RecommendationOutcome>> per_user(user_ranges.size());
    detail::parallel_for(user_ranges.size(), [&](std::size_t g) {
        const Index user = test[by_user[user_ranges[g].first]].user;
        const auto candidates = candidate_items(data, user, config.exclude_seen);
        std::vector<Index> top;
        try {
            top = generate_top_n(model, user, candidates, config.n);
        } catch (const EvaluationError&) {
            throw;
        } catch (const std::exception& e) {
            rethrow_for(data, user, kNoIndex, e);
        }
        auto& out = per_user[g];
        out.reserve(top.size());
        for (std::size_t r = 0; r < top.size(); ++r) {
            const Index item = top[r];
            out.push_back(RecommendationOutcome{user, item, r + 1, test_rows.find(user, item), segments.user_mean(user),
                                                segments.item_count(item), data.catalog_size(),
                                                segment_of(segments, user, item)});
        }
    }, 4);
    std::vector<RecommendationOutcome> outcomes;
    for (auto& v : per_user) outcomes.insert(outcomes.end(), v.begin(), v.end());
    result.table = aggregate(scored, comps, outcomes);
    result.timings.discover_seconds = seconds_since(t0);
    return result;
}

CoreResult run_explore_with(const SimilarityMatrix& kernel, const SplitDataset& data, const SegmentModel& segments,
                            const ProtocolConfig& config) {
    const KnnPredictor emulated(kernel, data, segments, "knn-kernel");
    return run_core(emulated, data, segments, config);
}

std::optional<CoreResult> run_explore(const Predictor& model, const SplitDataset& data, const SegmentModel& segments,
                                      const ProtocolConfig& config) {
    if (config.k < 1) throw ConfigError("explore neighborhood size must be >= 1");
    auto kernel = model.item_similarity_matrix(config.k);
    if (!kernel) return std::nullopt;
    return run_explore_with(*kernel, data, segments, config);
}

}  // namespace recoeval
