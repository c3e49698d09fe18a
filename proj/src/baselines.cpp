#include "recoeval/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "rng.hpp"

namespace recoeval {

namespace {

constexpr std::uint64_t kItemBasis = 0x84222325CBF29CE4ULL;

std::uint64_t user_key(std::string_view user_id) { return detail::fnv1a(user_id); }
std::uint64_t item_key(std::string_view item_id) { return detail::fnv1a(item_id, kItemBasis); }

double draw(std::uint64_t seed, std::uint64_t ukey, std::uint64_t ikey, const RatingScale& scale) noexcept {
    const std::uint64_t h = detail::splitmix64(detail::splitmix64(seed ^ ukey) ^ ikey);
    if (scale.discrete) {
        const auto levels = static_cast<std::uint64_t>(std::floor(scale.max - scale.min)) + 1;
        return scale.min + static_cast<double>(detail::below(h, levels));
    }
    return scale.min + (scale.max - scale.min) * (static_cast<double>(h >> 11) * 0x1.0p-53);
}

}  // namespace

double default_predict(const SegmentModel& stats, const RatingScale& scale, Index user, Index item) noexcept {
    const bool u = stats.user_known(user);
    const bool i = stats.item_known(item);
    double r = stats.global_mean;
    if (u && i) {
        r = 0.5 * (stats.item_means[item] + stats.user_means[user]);
    } else if (u) {
        r = stats.user_means[user];
    } else if (i) {
        r = stats.item_means[item];
    }
    return scale.clamp(r);
}

double random_predict(std::uint64_t seed, std::string_view user_id, std::string_view item_id,
                      const RatingScale& scale) noexcept {
    return draw(seed, user_key(user_id), item_key(item_id), scale);
}

RandomPredictor::RandomPredictor(const SplitDataset& data, std::uint64_t seed)
    : seed_(seed), scale_(data.scale()) {
    user_hash_.reserve(data.users().size());
    for (const auto& id : data.users().ids()) user_hash_.push_back(user_key(id));
    item_hash_.reserve(data.items().size());
    for (const auto& id : data.items().ids()) item_hash_.push_back(item_key(id));
}

double RandomPredictor::predict(Index user, Index item) const {
    if (user >= user_hash_.size() || item >= item_hash_.size()) {
        throw std::out_of_range("random predictor: index outside the dataset");
    }
    return draw(seed_, user_hash_[user], item_hash_[item], scale_);
}

}  // namespace recoeval
