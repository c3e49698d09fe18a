#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "recoeval/types.hpp"

namespace recoeval {

// Seeded synthetic rating generators. Every generator is a pure function of its spec.
enum class FixtureKind {
    LowRank,     // biases + planted rank-`rank` structure + noise, skewed popularity/activity
    RankOne,     // r = clamp(round(a_u * b_i)), no noise
    Uniform,     // ratings drawn uniformly from the integer levels
    TwoCluster,  // two disjoint communities, each rating its item group with one level per user
    Clustered,   // item clusters with per-user cluster affinities, skewed popularity
};

[[nodiscard]] FixtureKind parse_fixture_kind(std::string_view tag);
[[nodiscard]] std::string_view to_string(FixtureKind k) noexcept;

struct FixtureSpec {
    FixtureKind kind = FixtureKind::LowRank;
    std::size_t users = 500;
    std::size_t items = 200;
    double density = 0.05;  // mean fraction of the user x item grid that is observed
    std::uint64_t seed = 1;
    std::size_t rank = 3;      // LowRank
    double noise = 0.4;        // LowRank, Clustered: std-dev of additive rating noise
    std::size_t clusters = 5;  // Clustered
    double skew = 1.0;         // LowRank, Clustered: 0 = uniform popularity/activity
    RatingScale scale{};
};

[[nodiscard]] std::vector<RatingLog> generate_fixture(const FixtureSpec& spec);

// Writes `user_id,item_id,rating` with a header line.
void write_csv(const std::filesystem::path& path, const std::vector<RatingLog>& logs);

}  // namespace recoeval
