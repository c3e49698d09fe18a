#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "recoeval/dataset.hpp"
#include "recoeval/predictor.hpp"

namespace recoeval {

// (item_mean + user_mean) / 2 when both are known, the known one otherwise, else the
// global mean; clamped to the scale. Also the fallback of the KNN and MF predictors.
[[nodiscard]] double default_predict(const SegmentModel& stats, const RatingScale& scale, Index user,
                                     Index item) noexcept;

// Uniform over the integer levels of a discrete scale (continuous otherwise), as a pure
// function of (seed, user_id, item_id).
[[nodiscard]] double random_predict(std::uint64_t seed, std::string_view user_id, std::string_view item_id,
                                    const RatingScale& scale) noexcept;

class DefaultPredictor final : public Predictor {
public:
    DefaultPredictor(SegmentModel stats, RatingScale scale) : stats_(std::move(stats)), scale_(scale) {}

    [[nodiscard]] std::string name() const override { return "default"; }
    [[nodiscard]] double predict(Index user, Index item) const override {
        return default_predict(stats_, scale_, user, item);
    }

private:
    SegmentModel stats_;
    RatingScale scale_;
};

class RandomPredictor final : public Predictor {
public:
    RandomPredictor(const SplitDataset& data, std::uint64_t seed);

    [[nodiscard]] std::string name() const override { return "random"; }
    [[nodiscard]] double predict(Index user, Index item) const override;

private:
    std::uint64_t seed_;
    RatingScale scale_;
    std::vector<std::uint64_t> user_hash_;
    std::vector<std::uint64_t> item_hash_;
};

}  // namespace recoeval
