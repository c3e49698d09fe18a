#include "recoeval/fixtures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "rng.hpp"

namespace recoeval {

namespace {

using detail::normal;
using detail::uniform;
using detail::uniform01;

// Mean-one lognormal multipliers; skew 0 gives all ones.
std::vector<double> activity(std::size_t n, double skew, std::mt19937_64& gen) {
    std::vector<double> out(n);
    for (auto& v : out) v = std::exp(skew * normal(gen) - 0.5 * skew * skew);
    return out;
}

double level(double x, const RatingScale& scale) {
    return scale.clamp(scale.discrete ? std::round(x) : x);
}

double uniform_level(std::mt19937_64& gen, const RatingScale& scale) {
    if (!scale.discrete) return uniform(gen, scale.min, scale.max);
    const auto levels = static_cast<std::uint64_t>(scale.max - scale.min) + 1;
    return scale.min + static_cast<double>(detail::below(gen, levels));
}

template <class RatingFn>
std::vector<RatingLog> sample_grid(const FixtureSpec& spec, const std::vector<double>& user_w,
                                   const std::vector<double>& item_w, std::mt19937_64& gen,
                                   RatingFn&& rating) {
    std::vector<RatingLog> logs;
    logs.reserve(static_cast<std::size_t>(spec.density * static_cast<double>(spec.users * spec.items)) + 16);
    for (std::size_t u = 0; u < spec.users; ++u) {
        for (std::size_t i = 0; i < spec.items; ++i) {
            const double p = std::min(1.0, spec.density * user_w[u] * item_w[i]);
            if (uniform01(gen) >= p) continue;
            logs.push_back(RatingLog{std::to_string(u + 1), std::to_string(i + 1), rating(u, i), std::nullopt});
        }
    }
    return logs;
}

}  // namespace

FixtureKind parse_fixture_kind(std::string_view tag) {
    if (tag == "lowrank") return FixtureKind::LowRank;
    if (tag == "rank1") return FixtureKind::RankOne;
    if (tag == "uniform") return FixtureKind::Uniform;
    if (tag == "two-cluster") return FixtureKind::TwoCluster;
    if (tag == "clustered") return FixtureKind::Clustered;
    throw ConfigError("unknown fixture kind '" + std::string(tag) +
                      "' (expected lowrank, rank1, uniform, two-cluster or clustered)");
}

std::string_view to_string(FixtureKind k) noexcept {
    switch (k) {
        case FixtureKind::LowRank: return "lowrank";
        case FixtureKind::RankOne: return "rank1";
        case FixtureKind::Uniform: return "uniform";
        case FixtureKind::TwoCluster: return "two-cluster";
        case FixtureKind::Clustered: return "clustered";
    }
    return "?";
}

std::vector<RatingLog> generate_fixture(const FixtureSpec& spec) {
    if (spec.users == 0 || spec.items == 0) throw ConfigError("fixture needs at least one user and one item");
    if (!(spec.density > 0.0 && spec.density <= 1.0)) throw ConfigError("fixture density must lie in (0, 1]");
    std::mt19937_64 gen(spec.seed);
    const auto& scale = spec.scale;
    const double mid = 0.5 * (scale.min + scale.max);
    const std::vector<double> flat_users(spec.users, 1.0);
    const std::vector<double> flat_items(spec.items, 1.0);

    switch (spec.kind) {
        case FixtureKind::LowRank: {
            if (spec.rank == 0) throw ConfigError("lowrank fixture needs rank >= 1");
            const auto user_w = activity(spec.users, spec.skew, gen);
            const auto item_w = activity(spec.items, spec.skew, gen);
            const double sd = std::sqrt(0.8 / std::sqrt(static_cast<double>(spec.rank)));
            std::vector<double> ub(spec.users), ib(spec.items);
            std::vector<double> uf(spec.users * spec.rank), vf(spec.items * spec.rank);
            for (auto& v : ub) v = 0.4 * normal(gen);
            for (auto& v : ib) v = 0.4 * normal(gen);
            for (auto& v : uf) v = sd * normal(gen);
            for (auto& v : vf) v = sd * normal(gen);
            return sample_grid(spec, user_w, item_w, gen, [&](std::size_t u, std::size_t i) {
                double x = mid + 0.5 + ub[u] + ib[i];
                for (std::size_t k = 0; k < spec.rank; ++k) x += uf[u * spec.rank + k] * vf[i * spec.rank + k];
                return level(x + spec.noise * normal(gen), scale);
            });
        }
        case FixtureKind::RankOne: {
            const double hi = std::sqrt(scale.max);
            const double lo = std::max(scale.min, 0.0) > 0.0 ? std::sqrt(scale.min) : 0.0;
            std::vector<double> a(spec.users), b(spec.items);
            for (auto& v : a) v = uniform(gen, lo, hi);
            for (auto& v : b) v = uniform(gen, lo, hi);
            return sample_grid(spec, flat_users, flat_items, gen,
                               [&](std::size_t u, std::size_t i) { return level(a[u] * b[i], scale); });
        }
        case FixtureKind::Uniform:
            return sample_grid(spec, flat_users, flat_items, gen,
                               [&](std::size_t, std::size_t) { return uniform_level(gen, scale); });
        case FixtureKind::TwoCluster: {
            // Community of user u rates only the matching item group, so cross-group
            // pairs never share a rater.
            std::vector<double> user_level(spec.users);
            for (auto& v : user_level) v = uniform_level(gen, scale);
            const std::size_t half_users = (spec.users + 1) / 2;
            const std::size_t half_items = (spec.items + 1) / 2;
            const double p = std::min(1.0, 2.0 * spec.density);
            std::vector<RatingLog> logs;
            for (std::size_t u = 0; u < spec.users; ++u) {
                const bool first = u < half_users;
                const std::size_t begin = first ? 0 : half_items;
                const std::size_t end = first ? half_items : spec.items;
                for (std::size_t i = begin; i < end; ++i) {
                    if (uniform01(gen) >= p) continue;
                    logs.push_back(RatingLog{std::to_string(u + 1), std::to_string(i + 1), user_level[u], std::nullopt});
                }
            }
            return logs;
        }
        case FixtureKind::Clustered: {
            if (spec.clusters == 0) throw ConfigError("clustered fixture needs clusters >= 1");
            const auto user_w = activity(spec.users, spec.skew, gen);
            const auto item_w = activity(spec.items, spec.skew, gen);
            std::vector<std::size_t> cluster(spec.items);
            for (std::size_t i = 0; i < spec.items; ++i) cluster[i] = i % spec.clusters;
            std::vector<double> affinity(spec.users * spec.clusters);
            for (auto& v : affinity) v = normal(gen);
            std::vector<double> quality(spec.items);
            for (auto& v : quality) v = 0.3 * normal(gen);
            return sample_grid(spec, user_w, item_w, gen, [&](std::size_t u, std::size_t i) {
                const double x = mid + 0.3 + 1.2 * affinity[u * spec.clusters + cluster[i]] + quality[i];
                return level(x + spec.noise * normal(gen), scale);
            });
        }
    }
    return {};
}

void write_csv(const std::filesystem::path& path, const std::vector<RatingLog>& logs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot write " + path.string());
    out << "user_id,item_id,rating\n";
    char buf[64];
    for (const auto& log : logs) {
        const auto res = std::to_chars(buf, buf + sizeof buf, log.rating);
        out << log.user_id << ',' << log.item_id << ',' << std::string_view(buf, res.ptr - buf) << '\n';
    }
    if (!out) throw DatasetError("write failed for " + path.string());
}

}  // namespace recoeval
