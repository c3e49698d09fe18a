#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recoeval/dataset.hpp"
#include "recoeval/predictor.hpp"
#include "recoeval/similarity.hpp"

namespace recoeval {

// Biased factor model layout: user vectors hold 1 in slot 0, item vectors hold 1 in
// slot 1, so p.q = item_bias + user_bias + sum of the free factor products.
inline constexpr std::size_t kUserPinnedSlot = 0;
inline constexpr std::size_t kItemPinnedSlot = 1;

struct FactorModel;

struct MfConfig {
    std::size_t factors = 16;
    double learning_rate = 0.030;
    double regularization = 0.008;
    double budget_seconds = 5400.0;
    double validation_fraction = 0.015;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 1;
    // Free parameters start uniform in [-init_range, init_range].
    double init_range = 0.01;
    // Observer called after every epoch's SGD pass with the current (not best) state.
    std::function<void(const FactorModel&, std::size_t epoch)> on_epoch;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double validation_rmse = 0.0;
    double elapsed_seconds = 0.0;
};

enum class StopReason { ValidationIncrease, Budget, MaxEpochs };
[[nodiscard]] std::string_view to_string(StopReason r) noexcept;

struct FactorModel {
    std::size_t factors = 0;
    double learning_rate = 0.0;
    double regularization = 0.0;
    double validation_fraction = 0.0;
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;  // epoch whose state was returned

    // Ids sorted by id_less; row r of a table belongs to ids[r].
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::vector<double> user_factors;  // user_ids.size() x factors, row-major
    std::vector<double> item_factors;  // item_ids.size() x factors, row-major

    // Not serialized.
    std::vector<EpochRecord> training_log;
    StopReason stop_reason = StopReason::MaxEpochs;

    [[nodiscard]] std::span<const double> user_vector(std::size_t row) const {
        return {user_factors.data() + row * factors, factors};
    }
    [[nodiscard]] std::span<const double> item_vector(std::size_t row) const {
        return {item_factors.data() + row * factors, factors};
    }
    [[nodiscard]] std::optional<std::size_t> user_row(std::string_view id) const;
    [[nodiscard]] std::optional<std::size_t> item_row(std::string_view id) const;

    // Raw p_u . q_i, unclamped.
    [[nodiscard]] double score(std::size_t user_row, std::size_t item_row) const;

    // Serialized content only (hyperparameters, best epoch and factor tables).
    [[nodiscard]] bool same_parameters(const FactorModel& other) const;
};

// One simultaneous SGD step on a single log; pinned slots are left untouched.
void sgd_update(std::span<double> user, std::span<double> item, double rating, double learning_rate,
                double regularization);

// Trains on data.train(); a seeded validation subset drives early stopping. After three
// consecutive increases of validation RMSE the state from before the increases is
// returned; on budget or epoch-cap stops, the epoch with the lowest validation RMSE.
[[nodiscard]] FactorModel train_mf(const SplitDataset& data, const MfConfig& config);

// Pearson correlation between item factor vectors; top-K strictly positive neighbors per
// item, indexed by model item row.
[[nodiscard]] SimilarityMatrix mf_item_similarity(const FactorModel& model, std::size_t k,
                                                  bool include_pinned_slots = true);

void save_factor_model(const std::filesystem::path& path, const FactorModel& model);
[[nodiscard]] FactorModel load_factor_model(const std::filesystem::path& path);

// Clamped p_u . q_i; users or items without factors fall back to default_predict.
class MfPredictor final : public Predictor {
public:
    MfPredictor(FactorModel model, const SplitDataset& data, SegmentModel stats, bool include_pinned_slots = true);

    [[nodiscard]] std::string name() const override { return "mf"; }
    [[nodiscard]] double predict(Index user, Index item) const override;
    [[nodiscard]] std::optional<SimilarityMatrix> item_similarity_matrix(std::size_t k) const override;

    [[nodiscard]] const FactorModel& model() const noexcept { return model_; }

private:
    FactorModel model_;
    SegmentModel stats_;
    RatingScale scale_;
    std::vector<Index> user_row_;          // dataset user -> model row
    std::vector<Index> item_row_;          // dataset item -> model row
    std::vector<Index> item_of_row_;       // model row -> dataset item
    std::size_t catalog_size_;
    bool include_pinned_slots_;
};

}  // namespace recoeval
