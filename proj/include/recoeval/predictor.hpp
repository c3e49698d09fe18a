#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "recoeval/similarity.hpp"
#include "recoeval/types.hpp"

namespace recoeval {

// Contract shared by every model under evaluation. Indices refer to the SplitDataset the
// model was trained on; users/items without train data must still get a prediction.
class Predictor {
public:
    virtual ~Predictor() = default;

    [[nodiscard]] virtual std::string name() const = 0;

    // Always within the rating scale; repeated calls return the same value.
    [[nodiscard]] virtual double predict(Index user, Index item) const = 0;

    // Scores many items for one user. Must equal predict() element-wise.
    virtual void predict_user(Index user, std::span<const Index> items, std::span<double> out) const {
        for (std::size_t k = 0; k < items.size(); ++k) out[k] = predict(user, items[k]);
    }

    // Models that can expose an item-item similarity kernel return it here.
    [[nodiscard]] virtual std::optional<SimilarityMatrix> item_similarity_matrix(std::size_t /*k*/) const {
        return std::nullopt;
    }
};

}  // namespace recoeval
