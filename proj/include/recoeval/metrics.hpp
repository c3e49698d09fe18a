#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recoeval/types.hpp"

namespace recoeval {

struct ScoredLog {
    Index user = kNoIndex;
    Index item = kNoIndex;
    double true_rating = 0.0;
    double predicted_rating = 0.0;
    Segment segment = Segment::LuserUitem;
};

// One top-N slot of one user, judged against that user's test logs.
struct RecommendationOutcome {
    Index user = kNoIndex;
    Index item = kNoIndex;
    std::size_t rank = 1;  // 1..N
    std::optional<double> true_rating;  // present iff evaluable
    double user_mean = 0.0;             // train mean of the user
    std::size_t item_count = 0;         // train logs of the item, count(i)
    std::size_t catalog_size = 0;       // |I|
    Segment segment = Segment::LuserUitem;

    [[nodiscard]] bool evaluable() const noexcept { return true_rating.has_value(); }
};

struct RatedPair {
    double truth = 0.0;
    double predicted = 0.0;
};

struct PairCount {
    std::size_t compatible = 0;
    std::size_t counted = 0;

    [[nodiscard]] bool operator==(const PairCount&) const = default;
};

// Absent for an empty input.
[[nodiscard]] std::optional<double> rmse(std::span<const ScoredLog> scored);

// Pairs of one user's test logs with different true ratings; a pair is compatible when
// the predictions order it the same way (tied predictions are not compatible).
[[nodiscard]] PairCount comp_user(std::span<const RatedPair> logs);

// Relevant means true_rating >= user_mean. Absent when no outcome is evaluable.
[[nodiscard]] std::optional<double> precision_user(std::span<const RecommendationOutcome> outcomes);

// Average Measure of Impact: mean over evaluable outcomes of
// |I| * sign(true_rating - user_mean) / count(i). Outcomes with count(i) = 0 are skipped.
[[nodiscard]] std::optional<double> ami_user(std::span<const RecommendationOutcome> outcomes);

struct UserComp {
    Index user = kNoIndex;
    UserClass user_class = UserClass::Light;
    PairCount pairs;
};

struct MetricEntry {
    std::string function;  // Decide | Compare | Discover
    std::string metric;    // RMSE | COMP | COMP_micro | Precision | AMI
    std::string segment;   // HuserPitem ... | Huser | Luser | Global
    std::optional<double> value;
    // RMSE: logs. COMP: users with counted pairs. COMP_micro: pairs.
    // Precision: evaluable outcomes. AMI: evaluable outcomes with count(i) > 0.
    std::size_t support = 0;

    [[nodiscard]] bool operator==(const MetricEntry&) const = default;
};

struct MetricTable {
    std::vector<MetricEntry> entries;
    std::size_t ami_excluded = 0;  // evaluable outcomes dropped from AMI for count(i) = 0

    [[nodiscard]] const MetricEntry* find(std::string_view metric, std::string_view segment) const;
    [[nodiscard]] bool operator==(const MetricTable&) const = default;
};

inline constexpr std::string_view kGlobal = "Global";

// Segment-wise tables: RMSE per log segment; COMP per user class (macro over users and
// micro over pairs); Precision and AMI macro-averaged over users, each cell restricted
// to the outcomes whose segment matches.
[[nodiscard]] MetricTable aggregate(std::span<const ScoredLog> scored, std::span<const UserComp> comps,
                                    std::span<const RecommendationOutcome> outcomes);

// CSV with columns function,metric,segment,value,support; absent values are empty.
[[nodiscard]] std::string to_csv(const MetricTable& table);

}  // namespace recoeval
