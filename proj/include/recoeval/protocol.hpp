#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recoeval/dataset.hpp"
#include "recoeval/metrics.hpp"
#include "recoeval/predictor.hpp"

namespace recoeval {

struct ProtocolConfig {
    std::size_t n = 10;         // top-N size
    std::size_t k = 100;        // neighborhood size of the explore kernel
    bool exclude_seen = true;   // drop the user's train items from the top-N candidates

    [[nodiscard]] bool operator==(const ProtocolConfig&) const = default;
};

struct PhaseTimings {
    double decide_seconds = 0.0;
    double compare_seconds = 0.0;
    double discover_seconds = 0.0;
};

struct CoreResult {
    MetricTable table;
    PhaseTimings timings;  // wall clock, not part of the deterministic output
};

// Catalog items in index order, minus the user's train items when exclude_seen.
[[nodiscard]] std::vector<Index> candidate_items(const SplitDataset& data, Index user, bool exclude_seen);

// Highest predicted rating first, ties by ascending item index; all candidates if fewer than n.
[[nodiscard]] std::vector<Index> generate_top_n(const Predictor& model, Index user, std::span<const Index> candidates,
                                                std::size_t n);

// Decide (RMSE), Compare (COMP) and Discover (Precision, AMI) on data.test().
[[nodiscard]] CoreResult run_core(const Predictor& model, const SplitDataset& data, const SegmentModel& segments,
                                  const ProtocolConfig& config);

// Runs the core protocol with a KNN model built on the predictor's top-K similarity
// kernel; nullopt when the predictor exposes no kernel.
[[nodiscard]] std::optional<CoreResult> run_explore(const Predictor& model, const SplitDataset& data,
                                                    const SegmentModel& segments, const ProtocolConfig& config);

// Same, with an explicit kernel.
[[nodiscard]] CoreResult run_explore_with(const SimilarityMatrix& kernel, const SplitDataset& data,
                                          const SegmentModel& segments, const ProtocolConfig& config);

}  // namespace recoeval
