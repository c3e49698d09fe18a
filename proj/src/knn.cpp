#include "recoeval/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "parallel.hpp"
#include "recoeval/baselines.hpp"
#include "rng.hpp"

namespace recoeval {

namespace {

constexpr double kRelativeVarianceFloor = 1e-12;

double shrunk_correlation(double n, double cov, double var_a, double var_b, double sq_a, double sq_b,
                          std::size_t gamma) {
    if (n < 2.0) return 0.0;
    if (var_a <= kRelativeVarianceFloor * sq_a || var_b <= kRelativeVarianceFloor * sq_b) return 0.0;
    const double corr = std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
    const double g = static_cast<double>(gamma);
    return corr * std::min(n, g) / g;
}

std::vector<Neighbor> top_k(std::vector<Neighbor> candidates, std::size_t k) {
    if (candidates.size() > k) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                          candidates.end(), neighbor_before);
        candidates.resize(k);
    } else {
        std::sort(candidates.begin(), candidates.end(), neighbor_before);
    }
    return candidates;
}

// Co-rating sums of one (item, partner) pair.
struct PairSums {
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
};

}  // namespace

double weighted_pearson(std::span<const Index> users_a, std::span<const double> ratings_a,
                        std::span<const Index> users_b, std::span<const double> ratings_b, std::size_t gamma) {
    if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    std::vector<double> xa;
    std::vector<double> xb;
    std::size_t p = 0;
    std::size_t q = 0;
    while (p < users_a.size() && q < users_b.size()) {
        if (users_a[p] < users_b[q]) {
            ++p;
        } else if (users_b[q] < users_a[p]) {
            ++q;
        } else {
            xa.push_back(ratings_a[p++]);
            xb.push_back(ratings_b[q++]);
        }
    }
    const auto n = static_cast<double>(xa.size());
    if (xa.size() < 2) return 0.0;
    double ma = 0, mb = 0, sq_a = 0, sq_b = 0;
    for (std::size_t k = 0; k < xa.size(); ++k) {
        ma += xa[k];
        mb += xb[k];
        sq_a += xa[k] * xa[k];
        sq_b += xb[k] * xb[k];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t k = 0; k < xa.size(); ++k) {
        const double da = xa[k] - ma;
        const double db = xb[k] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    return shrunk_correlation(n, cov, va, vb, sq_a, sq_b, gamma);
}

SimilarityMatrix build_similarity_matrix(const SplitDataset& data, std::size_t k, std::size_t gamma) {
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    const auto& by_user = data.train_by_user();
    const auto& by_item = data.train_by_item();
    const std::size_t n_items = data.items().size();
    std::vector<std::vector<Neighbor>> lists(n_items);

    detail::parallel_for(n_items, [&](std::size_t item_index) {
        const auto item = static_cast<Index>(item_index);
        thread_local std::vector<PairSums> acc;
        thread_local std::vector<Index> touched;
        if (acc.size() != n_items) acc.assign(n_items, PairSums{});
        touched.clear();
        const auto raters = by_item.columns_of(item);
        const auto own = by_item.values_of(item);
        for (std::size_t p = 0; p < raters.size(); ++p) {
            const double a = own[p];
            const auto partners = by_user.columns_of(raters[p]);
            const auto partner_ratings = by_user.values_of(raters[p]);
            for (std::size_t q = 0; q < partners.size(); ++q) {
                const Index j = partners[q];
                if (j == item) continue;
                auto& s = acc[j];
                if (s.n == 0) touched.push_back(j);
                const double b = partner_ratings[q];
                s.n += 1;
                s.sa += a;
                s.sb += b;
                s.saa += a * a;
                s.sbb += b * b;
                s.sab += a * b;
            }
        }
        std::vector<Neighbor> candidates;
        for (const Index j : touched) {
            const auto& s = acc[j];
            const double va = s.saa - s.sa * s.sa / s.n;
            const double vb = s.sbb - s.sb * s.sb / s.n;
            const double cov = s.sab - s.sa * s.sb / s.n;
            const double w = shrunk_correlation(s.n, cov, va, vb, s.saa, s.sbb, gamma);
            if (w > 0.0) candidates.push_back(Neighbor{j, w});
        }
        for (const Index j : touched) acc[j] = PairSums{};
        lists[item] = top_k(std::move(candidates), k);
    }, 8);
    return SimilarityMatrix(k, std::move(lists));
}

double knn_predict(const SimilarityMatrix& matrix, const SegmentModel& stats, const RatingScale& scale,
                   const SparseRows& train_by_user, Index user, Index item) {
    double num = 0.0;
    double den = 0.0;
    if (user < train_by_user.rows()) {
        for (const auto& nb : matrix.neighbors(item)) {
            if (nb.weight <= 0.0) continue;
            const auto r = train_by_user.find(user, nb.item);
            if (!r) continue;
            num += nb.weight * (*r - stats.item_means[nb.item]);
            den += nb.weight;
        }
    }
    if (den <= 0.0) return default_predict(stats, scale, user, item);
    return scale.clamp(stats.item_means[item] + num / den);
}

SimilarityMatrix shuffle_neighbors(const SimilarityMatrix& matrix, std::uint64_t seed) {
    const std::size_t n = matrix.items();
    std::vector<std::vector<Neighbor>> lists(n);
    for (Index i = 0; i < n; ++i) {
        const auto original = matrix.neighbors(i);
        if (original.empty()) continue;
        std::mt19937_64 gen(detail::splitmix64(seed ^ detail::splitmix64(i)));
        const std::size_t take = std::min(original.size(), n - 1);
        std::vector<Index> chosen;
        chosen.reserve(take);
        if (take * 2 >= n) {
            std::vector<Index> pool;
            pool.reserve(n - 1);
            for (Index j = 0; j < n; ++j) {
                if (j != i) pool.push_back(j);
            }
            detail::shuffle(pool.begin(), pool.end(), gen);
            chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        } else {
            while (chosen.size() < take) {
                const auto j = static_cast<Index>(detail::below(gen, n));
                if (j == i || std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
                chosen.push_back(j);
            }
        }
        auto& list = lists[i];
        for (std::size_t r = 0; r < take; ++r) list.push_back(Neighbor{chosen[r], original[r].weight});
        std::sort(list.begin(), list.end(), neighbor_before);
    }
    return SimilarityMatrix(matrix.k(), std::move(lists));
}

KnnPredictor::KnnPredictor(SimilarityMatrix matrix, const SplitDataset& data, SegmentModel stats, std::string name)
    : matrix_(std::move(matrix)),
      stats_(std::move(stats)),
      scale_(data.scale()),
      train_by_user_(data.train_by_user()),
      catalog_size_(data.catalog_size()),
      name_(std::move(name)) {
    if (matrix_.items() > catalog_size_) throw std::invalid_argument("similarity matrix larger than the catalog");
}

KnnPredictor KnnPredictor::train(const SplitDataset& data, SegmentModel stats, const KnnConfig& config) {
    return KnnPredictor(build_similarity_matrix(data, config.k, config.gamma), data, std::move(stats));
}

double KnnPredictor::predict(Index user, Index item) const {
    return knn_predict(matrix_, stats_, scale_, train_by_user_, user, item);
}

void KnnPredictor::predict_user(Index user, std::span<const Index> items, std::span<double> out) const {
    // Dense copy of the user's ratings; NaN marks unrated. Same summation order as predict().
    thread_local std::vector<double> dense;
    dense.assign(catalog_size_, std::numeric_limits<double>::quiet_NaN());
    const bool known = user < train_by_user_.rows();
    if (known) {
        const auto cols = train_by_user_.columns_of(user);
        const auto vals = train_by_user_.values_of(user);
        for (std::size_t k = 0; k < cols.size(); ++k) dense[cols[k]] = vals[k];
    }
    for (std::size_t k = 0; k < items.size(); ++k) {
        const Index item = items[k];
        double num = 0.0;
        double den = 0.0;
        if (known) {
            for (const auto& nb : matrix_.neighbors(item)) {
                if (nb.weight <= 0.0) continue;
                const double r = dense[nb.item];
                if (std::isnan(r)) continue;
                num += nb.weight * (r - stats_.item_means[nb.item]);
                den += nb.weight;
            }
        }
        out[k] = den <= 0.0 ? default_predict(stats_, scale_, user, item)
                            : scale_.clamp(stats_.item_means[item] + num / den);
    }
}

}  // namespace recoeval
