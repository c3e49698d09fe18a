#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "recoeval/dataset.hpp"

namespace recoeval {

struct Neighbor {
    Index item = kNoIndex;
    double weight = 0.0;

    [[nodiscard]] bool operator==(const Neighbor&) const = default;
};

// Ranking used by every neighbor list: weight descending, then item index ascending
// (index order is id order, see IdIndex).
[[nodiscard]] constexpr bool neighbor_before(const Neighbor& a, const Neighbor& b) noexcept {
    return a.weight != b.weight ? a.weight > b.weight : a.item < b.item;
}

// Per-item top-K neighbor lists over the item index of one SplitDataset.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t k, std::vector<std::vector<Neighbor>> lists);

    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] std::size_t items() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    [[nodiscard]] std::span<const Neighbor> neighbors(Index item) const {
        if (item >= items()) return {};
        return {entries_.data() + offsets_[item], offsets_[item + 1] - offsets_[item]};
    }
    [[nodiscard]] std::size_t nnz() const noexcept { return entries_.size(); }

    // First min(k, K) neighbors of every list.
    [[nodiscard]] SimilarityMatrix truncated(std::size_t k) const;

    [[nodiscard]] bool operator==(const SimilarityMatrix&) const = default;

private:
    std::size_t k_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> entries_;
};

// Flat file: `# k=<K>`, header `item_id,neighbor_id,weight`, then one line per entry in
// (item_id, rank) order. Weights use the shortest round-trip decimal form.
void save_similarity(const std::filesystem::path& path, const SimilarityMatrix& m, const IdIndex& items);
[[nodiscard]] SimilarityMatrix load_similarity(const std::filesystem::path& path, const IdIndex& items);

}  // namespace recoeval
