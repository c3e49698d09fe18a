#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "recoeval/dataset.hpp"
#include "recoeval/predictor.hpp"
#include "recoeval/similarity.hpp"

namespace recoeval {

struct KnnConfig {
    std::size_t k = 100;
    // Support at which a correlation gets full weight.
    std::size_t gamma = 50;
};

// Pearson correlation over the common raters C of two items, times min(|C|, gamma)/gamma.
// Inputs are (user, rating) rows sorted by user. Zero when |C| < 2 or a variance is zero.
[[nodiscard]] double weighted_pearson(std::span<const Index> users_a, std::span<const double> ratings_a,
                                      std::span<const Index> users_b, std::span<const double> ratings_b,
                                      std::size_t gamma);

// Top-K strictly positive weighted-Pearson neighbors of every item, from co-rating
// statistics accumulated over the user -> items lists.
[[nodiscard]] SimilarityMatrix build_similarity_matrix(const SplitDataset& data, std::size_t k,
                                                       std::size_t gamma);

// Mean-centered weighted deviation over the positive neighbors the user rated; falls back
// to default_predict when there is none.
[[nodiscard]] double knn_predict(const SimilarityMatrix& matrix, const SegmentModel& stats,
                                 const RatingScale& scale, const SparseRows& train_by_user, Index user,
                                 Index item);

// Same lists with each neighbor id replaced by a random distinct item (weights kept), then
// re-ranked. Used as the random-kernel baseline for explore evaluation.
[[nodiscard]] SimilarityMatrix shuffle_neighbors(const SimilarityMatrix& matrix, std::uint64_t seed);

// Item-item KNN over any similarity kernel.
class KnnPredictor final : public Predictor {
public:
    KnnPredictor(SimilarityMatrix matrix, const SplitDataset& data, SegmentModel stats,
                 std::string name = "knn");

    // Builds the weighted-Pearson kernel from data.train().
    [[nodiscard]] static KnnPredictor train(const SplitDataset& data, SegmentModel stats, const KnnConfig& config);

    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] double predict(Index user, Index item) const override;
    void predict_user(Index user, std::span<const Index> items, std::span<double> out) const override;
    [[nodiscard]] std::optional<SimilarityMatrix> item_similarity_matrix(std::size_t k) const override {
        return matrix_.truncated(k);
    }

    [[nodiscard]] const SimilarityMatrix& matrix() const noexcept { return matrix_; }

private:
    SimilarityMatrix matrix_;
    SegmentModel stats_;
    RatingScale scale_;
    SparseRows train_by_user_;
    std::size_t catalog_size_;
    std::string name_;
};

}  // namespace recoeval
