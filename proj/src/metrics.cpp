#include "recoeval/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>

namespace recoeval {

namespace {

constexpr std::array<Segment, kSegmentCount> kSegments = {Segment::HuserPitem, Segment::LuserPitem,
                                                          Segment::HuserUitem, Segment::LuserUitem};

int sign(double x) noexcept { return (x > 0.0) - (x < 0.0); }

// Fenwick tree over prediction ranks.
class RankCounter {
public:
    explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t rank) {
        for (std::size_t k = rank + 1; k < tree_.size(); k += k & (~k + 1)) ++tree_[k];
    }
    // Number of inserted ranks strictly below `rank`.
    [[nodiscard]] std::size_t below(std::size_t rank) const {
        std::size_t s = 0;
        for (std::size_t k = rank; k > 0; k -= k & (~k + 1)) s += tree_[k];
        return s;
    }

private:
    std::vector<std::size_t> tree_;
};

struct Mean {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    [[nodiscard]] std::optional<double> value() const {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

}  // namespace

std::optional<double> rmse(std::span<const ScoredLog> scored) {
    if (scored.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& l : scored) {
        const double e = l.predicted_rating - l.true_rating;
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(scored.size()));
}

PairCount comp_user(std::span<const RatedPair> logs) {
    const std::size_t n = logs.size();
    if (n < 2) return {};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return logs[a].truth != logs[b].truth ? logs[a].truth < logs[b].truth : logs[a].predicted < logs[b].predicted;
    });
    std::vector<double> preds(n);
    for (std::size_t k = 0; k < n; ++k) preds[k] = logs[k].predicted;
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    auto rank_of = [&](double p) {
        return static_cast<std::size_t>(std::lower_bound(preds.begin(), preds.end(), p) - preds.begin());
    };

    PairCount out;
    std::size_t same_truth_pairs = 0;
    RankCounter seen(preds.size());
    for (std::size_t g = 0; g < n;) {
        std::size_t end = g;
        while (end < n && logs[order[end]].truth == logs[order[g]].truth) ++end;
        const std::size_t size = end - g;
        same_truth_pairs += size * (size - 1) / 2;
        // Everything already inserted has a strictly smaller true rating.
        for (std::size_t k = g; k < end; ++k) out.compatible += seen.below(rank_of(logs[order[k]].predicted));
        for (std::size_t k = g; k < end; ++k) seen.add(rank_of(logs[order[k]].predicted));
        g = end;
    }
    out.counted = n * (n - 1) / 2 - same_truth_pairs;
    return out;
}

std::optional<double> precision_user(std::span<const RecommendationOutcome> outcomes) {
    std::size_t evaluable = 0;
    std::size_t relevant = 0;
    for (const auto& o : outcomes) {
        if (!o.evaluable()) continue;
        ++evaluable;
        if (*o.true_rating >= o.user_mean) ++relevant;
    }
    if (evaluable == 0) return std::nullopt;
    return static_cast<double>(relevant) / static_cast<double>(evaluable);
}

std::optional<double> ami_user(std::span<const RecommendationOutcome> outcomes) {
    std::size_t h = 0;
    double sum = 0.0;
    for (const auto& o : outcomes) {
        if (!o.evaluable() || o.item_count == 0) continue;
        ++h;
        sum += static_cast<double>(sign(*o.true_rating - o.user_mean)) * static_cast<double>(o.catalog_size) /
               static_cast<double>(o.item_count);
    }
    if (h == 0) return std::nullopt;
    return sum / static_cast<double>(h);
}

const MetricEntry* MetricTable::find(std::string_view metric, std::string_view segment) const {
    for (const auto& e : entries) {
        if (e.metric == metric && e.segment == segment) return &e;
    }
    return nullptr;
}

MetricTable aggregate(std::span<const ScoredLog> scored, std::span<const UserComp> comps,
                      std::span<const RecommendationOutcome> outcomes) {
    MetricTable table;

    // Decide.
    std::array<double, kSegmentCount + 1> sq{};
    std::array<std::size_t, kSegmentCount + 1> logs{};
    for (const auto& l : scored) {
        const double e = l.predicted_rating - l.true_rating;
        const auto s = static_cast<std::size_t>(l.segment);
        sq[s] += e * e;
        ++logs[s];
        sq[kSegmentCount] += e * e;
        ++logs[kSegmentCount];
    }
    auto rmse_cell = [&](std::size_t s) -> std::optional<double> {
        if (logs[s] == 0) return std::nullopt;
        return std::sqrt(sq[s] / static_cast<double>(logs[s]));
    };
    for (std::size_t s = 0; s < kSegmentCount; ++s) {
        table.entries.push_back({"Decide", "RMSE", std::string(to_string(kSegments[s])), rmse_cell(s), logs[s]});
    }
    table.entries.push_back({"Decide", "RMSE", std::string(kGlobal), rmse_cell(kSegmentCount), logs[kSegmentCount]});

    // Compare.
    std::array<Mean, 3> macro;  // Huser, Luser, Global
    std::array<PairCount, 3> micro{};
    std::vector<const UserComp*> by_user;
    by_user.reserve(comps.size());
    for (const auto& c : comps) by_user.push_back(&c);
    std::stable_sort(by_user.begin(), by_user.end(), [](auto* a, auto* b) { return a->user < b->user; });
    for (const auto* c : by_user) {
        if (c->pairs.counted == 0) continue;
        const double ratio = static_cast<double>(c->pairs.compatible) / static_cast<double>(c->pairs.counted);
        for (const std::size_t cell : {c->user_class == UserClass::Heavy ? std::size_t{0} : std::size_t{1}, std::size_t{2}}) {
            macro[cell].add(ratio);
            micro[cell].compatible += c->pairs.compatible;
            micro[cell].counted += c->pairs.counted;
        }
    }
    const std::array<std::string_view, 3> comp_cells = {"Huser", "Luser", kGlobal};
    for (std::size_t c = 0; c < 3; ++c) {
        table.entries.push_back({"Compare", "COMP", std::string(comp_cells[c]), macro[c].value(), macro[c].n});
    }
    for (std::size_t c = 0; c < 3; ++c) {
        std::optional<double> v;
        if (micro[c].counted > 0) {
            v = static_cast<double>(micro[c].compatible) / static_cast<double>(micro[c].counted);
        }
        table.entries.push_back({"Compare", "COMP_micro", std::string(comp_cells[c]), v, micro[c].counted});
    }

    // Discover: per user, per segment cell, then macro-average in user order.
    std::vector<std::size_t> order(outcomes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return outcomes[a].user != outcomes[b].user ? outcomes[a].user < outcomes[b].user
                                                    : outcomes[a].rank < outcomes[b].rank;
    });
    std::array<Mean, kSegmentCount + 1> precision;
    std::array<Mean, kSegmentCount + 1> ami;
    std::array<std::size_t, kSegmentCount + 1> precision_support{};
    std::array<std::size_t, kSegmentCount + 1> ami_support{};
    std::array<std::vector<RecommendationOutcome>, kSegmentCount + 1> cell;
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        while (end < order.size() && outcomes[order[end]].user == outcomes[order[g]].user) ++end;
        for (auto& c : cell) c.clear();
        for (std::size_t k = g; k < end; ++k) {
            const auto& o = outcomes[order[k]];
            cell[static_cast<std::size_t>(o.segment)].push_back(o);
            cell[kSegmentCount].push_back(o);
            if (o.evaluable()) {
                ++precision_support[static_cast<std::size_t>(o.segment)];
                ++precision_support[kSegmentCount];
                if (o.item_count > 0) {
                    ++ami_support[static_cast<std::size_t>(o.segment)];
                    ++ami_support[kSegmentCount];
                } else {
                    ++table.ami_excluded;
                }
            }
        }
        for (std::size_t s = 0; s <= kSegmentCount; ++s) {
            if (const auto p = precision_user(cell[s])) precision[s].add(*p);
            if (const auto a = ami_user(cell[s])) ami[s].add(*a);
        }
        g = end;
    }
    auto label = [](std::size_t s) {
        return s == kSegmentCount ? std::string(kGlobal) : std::string(to_string(kSegments[s]));
    };
    for (std::size_t s = 0; s <= kSegmentCount; ++s) {
        table.entries.push_back({"Discover", "Precision", label(s), precision[s].value(), precision_support[s]});
    }
    for (std::size_t s = 0; s <= kSegmentCount; ++s) {
        table.entries.push_back({"Discover", "AMI", label(s), ami[s].value(), ami_support[s]});
    }
    return table;
}

std::string to_csv(const MetricTable& table) {
    std::string out = "function,metric,segment,value,support\n";
    char buf[64];
    for (const auto& e : table.entries) {
        out += e.function + ',' + e.metric + ',' + e.segment + ',';
        if (e.value) {
            const auto res = std::to_chars(buf, buf + sizeof buf, *e.value);
            out.append(buf, res.ptr);
        }
        out += ',' + std::to_string(e.support) + '\n';
    }
    return out;
}

}  // namespace recoeval
