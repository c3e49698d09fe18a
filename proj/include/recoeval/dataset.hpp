#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recoeval/types.hpp"

namespace recoeval {

enum class DatasetFormat { Csv, Netflix };

[[nodiscard]] DatasetFormat parse_dataset_format(std::string_view tag);
[[nodiscard]] std::string_view to_string(DatasetFormat f) noexcept;

struct LoadResult {
    std::vector<RatingLog> logs;
    std::size_t duplicates_dropped = 0;
};

// Reads a rating log file. CSV: `user_id,item_id,rating[,timestamp]` with an optional
// header. Netflix: a single `mv_*.txt` file or a directory of them.
// Repeated (user, item) pairs keep the last occurrence.
[[nodiscard]] LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                      const RatingScale& scale = {});

// Ordering used for ids everywhere: all-digit ids compare numerically and sort before
// other ids, which compare lexicographically.
[[nodiscard]] bool id_less(std::string_view a, std::string_view b) noexcept;

// Dense, order-preserving interning of opaque ids (index order == id_less order).
class IdIndex {
public:
    IdIndex() = default;
    explicit IdIndex(std::vector<std::string> ids);

    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] const std::string& id(Index i) const { return ids_.at(i); }
    [[nodiscard]] std::optional<Index> find(std::string_view id) const;
    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, Index> lookup_;
};

// Compressed sparse rows of (column, rating), columns ascending within each row.
struct SparseRows {
    std::vector<std::size_t> offsets;  // size rows + 1
    std::vector<Index> columns;
    std::vector<double> values;

    [[nodiscard]] std::size_t rows() const noexcept {
        return offsets.empty() ? 0 : offsets.size() - 1;
    }
    [[nodiscard]] std::span<const Index> columns_of(Index row) const {
        return {columns.data() + offsets[row], offsets[row + 1] - offsets[row]};
    }
    [[nodiscard]] std::span<const double> values_of(Index row) const {
        return {values.data() + offsets[row], offsets[row + 1] - offsets[row]};
    }
    [[nodiscard]] std::size_t row_size(Index row) const {
        return offsets[row + 1] - offsets[row];
    }
    [[nodiscard]] std::optional<double> find(Index row, Index column) const;
};

// Train/test partition. Users and items are indexed over train ∪ test.
class SplitDataset {
public:
    SplitDataset(std::vector<RatingLog> train, std::vector<RatingLog> test, RatingScale scale);

    [[nodiscard]] const IdIndex& users() const noexcept { return users_; }
    [[nodiscard]] const IdIndex& items() const noexcept { return items_; }
    [[nodiscard]] std::size_t catalog_size() const noexcept { return items_.size(); }
    [[nodiscard]] const RatingScale& scale() const noexcept { return scale_; }

    [[nodiscard]] std::span<const Rating> train() const noexcept { return train_; }
    [[nodiscard]] std::span<const Rating> test() const noexcept { return test_; }
    [[nodiscard]] const std::vector<RatingLog>& train_logs() const noexcept { return train_logs_; }
    [[nodiscard]] const std::vector<RatingLog>& test_logs() const noexcept { return test_logs_; }

    // user -> (item, rating) and item -> (user, rating) over the train set.
    [[nodiscard]] const SparseRows& train_by_user() const noexcept { return train_by_user_; }
    [[nodiscard]] const SparseRows& train_by_item() const noexcept { return train_by_item_; }
    [[nodiscard]] const SparseRows& test_by_user() const noexcept { return test_by_user_; }

private:
    std::vector<RatingLog> train_logs_;
    std::vector<RatingLog> test_logs_;
    RatingScale scale_;
    IdIndex users_;
    IdIndex items_;
    std::vector<Rating> train_;
    std::vector<Rating> test_;
    SparseRows train_by_user_;
    SparseRows train_by_item_;
    SparseRows test_by_user_;
};

// Bernoulli split: each log goes to train with probability `ratio`, drawn in input order
// from a generator seeded with `seed`.
[[nodiscard]] SplitDataset split(std::span<const RatingLog> logs, double ratio, std::uint64_t seed,
                                 const RatingScale& scale = {});

// Train-set statistics and the mean-count segmentation.
struct SegmentModel {
    double user_threshold = 0.0;
    double item_threshold = 0.0;
    std::vector<std::size_t> user_counts;  // indexed like SplitDataset::users()
    std::vector<std::size_t> item_counts;  // count(i)
    std::vector<double> user_means;        // global_mean when the user has no train log
    std::vector<double> item_means;        // global_mean when the item has no train log
    double global_mean = 0.0;

    [[nodiscard]] bool user_known(Index u) const noexcept {
        return u < user_counts.size() && user_counts[u] > 0;
    }
    [[nodiscard]] bool item_known(Index i) const noexcept {
        return i < item_counts.size() && item_counts[i] > 0;
    }
    [[nodiscard]] double user_mean(Index u) const noexcept {
        return user_known(u) ? user_means[u] : global_mean;
    }
    [[nodiscard]] std::size_t item_count(Index i) const noexcept {
        return i < item_counts.size() ? item_counts[i] : 0;
    }
    [[nodiscard]] UserClass user_class(Index u) const noexcept;
    [[nodiscard]] ItemClass item_class(Index i) const noexcept;
};

[[nodiscard]] SegmentModel build_segment_model(const SplitDataset& data);

// Out-of-range or train-absent ids are Light / Unpopular.
[[nodiscard]] Segment segment_of(const SegmentModel& model, Index user, Index item) noexcept;

}  // namespace recoeval
