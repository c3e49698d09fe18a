#include <cmath>

#include "doctest.h"
#include "generators.hpp"
#include "oracle.hpp"
#include "recoeval/metrics.hpp"

using namespace recoeval;

namespace {

RecommendationOutcome outcome(Index user, std::optional<double> truth, double mean, std::size_t count,
                              std::size_t catalog, Segment seg = Segment::HuserPitem) {
    RecommendationOutcome o;
    o.user = user;
    o.true_rating = truth;
    o.user_mean = mean;
    o.item_count = count;
    o.catalog_size = catalog;
    o.segment = seg;
    return o;
}

std::vector<RatedPair> pairs_of(std::vector<double> truth, std::vector<double> pred) {
    std::vector<RatedPair> out;
    for (std::size_t k = 0; k < truth.size(); ++k) out.push_back({truth[k], pred[k]});
    return out;
}

PairCount brute_comp(const std::vector<RatedPair>& p) {
    std::vector<std::pair<double, double>> tp;
    for (auto& x : p) tp.emplace_back(x.truth, x.predicted);
    const auto [c, k] = oracle::comp_pairs(tp);
    return {c, k};
}

}  // namespace

TEST_CASE("rmse examples") {
    CHECK(!rmse({}).has_value());
    std::vector<ScoredLog> s = {{0, 0, 3, 3, {}}, {0, 1, 4, 4, {}}};
    CHECK(*rmse(s) == 0.0);
    s = {{0, 0, 3, 4, {}}, {0, 1, 4, 3, {}}};
    CHECK(*rmse(s) == 1.0);
}

TEST_CASE("comp examples") {
    CHECK(comp_user(pairs_of({5, 3, 1}, {4.0, 4.5, 2.0})) == PairCount{2, 3});
    CHECK(comp_user(pairs_of({5, 3, 1, 2}, {5, 3, 1, 2})) == PairCount{6, 6});
    CHECK(comp_user(pairs_of({4, 4, 4}, {1, 2, 3})) == PairCount{0, 0});
    CHECK(comp_user(pairs_of({4, 2}, {3, 3})) == PairCount{0, 1});
    CHECK(comp_user(pairs_of({4}, {3})) == PairCount{0, 0});
}

TEST_CASE("comp matches pair enumeration") {
    gen::Rng rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<RatedPair> p(static_cast<std::size_t>(rng.integer(0, 40)));
        const int levels = rng.integer(1, 6);
        for (auto& x : p) x = {double(rng.integer(1, levels)), double(rng.integer(1, rng.integer(1, 8)))};
        REQUIRE(comp_user(p) == brute_comp(p));
    }
}

TEST_CASE("comp is invariant under strictly increasing transforms of predictions") {
    gen::Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<RatedPair> p(static_cast<std::size_t>(rng.integer(2, 30)));
        for (auto& x : p) x = {double(rng.integer(1, 5)), rng.real(1, 5)};
        if (rng.chance(0.5)) p[1].predicted = p[0].predicted;
        auto q = p;
        const double a = rng.real(0.1, 3), b = rng.real(-2, 2);
        for (auto& x : q) x.predicted = std::exp(a * x.predicted) + b;
        CHECK(comp_user(p) == comp_user(q));
    }
}

TEST_CASE("precision examples") {
    std::vector<RecommendationOutcome> o = {outcome(0, 5, 3.5, 1, 10), outcome(0, 4, 3.5, 1, 10),
                                            outcome(0, 3, 3.5, 1, 10), outcome(0, 2, 3.5, 1, 10),
                                            outcome(0, std::nullopt, 3.5, 1, 10)};
    CHECK(*precision_user(o) == 0.5);
    o = {outcome(0, 4, 3.5, 1, 10), outcome(0, 3.5, 3.5, 1, 10)};
    CHECK(*precision_user(o) == 1.0);
    o = {outcome(0, std::nullopt, 3.5, 1, 10)};
    CHECK(!precision_user(o).has_value());
}

TEST_CASE("ami examples") {
    std::vector<RecommendationOutcome> o = {outcome(0, 5, 3, 2, 100), outcome(0, 1, 3, 50, 100),
                                            outcome(0, std::nullopt, 3, 1, 100)};
    CHECK(*ami_user(o) == doctest::Approx(24.0).epsilon(1e-15));
    o = {outcome(0, 3, 3, 7, 100)};
    CHECK(*ami_user(o) == 0.0);
    o = {outcome(0, 5, 3, 0, 100)};
    CHECK(!ami_user(o).has_value());
}

TEST_CASE("ami grows as relevant items get rarer") {
    gen::Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t catalog = static_cast<std::size_t>(rng.integer(10, 1000));
        std::vector<RecommendationOutcome> o;
        for (int k = 0; k < rng.integer(1, 10); ++k) {
            o.push_back(outcome(0, rng.integer(1, 5), 3.0, static_cast<std::size_t>(rng.integer(2, 100)), catalog));
        }
        o[0].true_rating = 5.0;
        const double before = *ami_user(o);
        o[0].item_count -= 1;
        CHECK(*ami_user(o) > before);
    }
}

TEST_CASE("aggregate: single-member cells and macro vs micro comp") {
    std::vector<UserComp> comps = {{0, UserClass::Heavy, {1, 1}}, {1, UserClass::Heavy, {0, 3}}};
    auto t = aggregate({}, comps, {});
    CHECK(*t.find("COMP", "Global")->value == 0.5);
    CHECK(*t.find("COMP_micro", "Global")->value == 0.25);
    CHECK(t.find("COMP", "Huser")->support == 2);
    CHECK(t.find("COMP_micro", "Huser")->support == 4);
    CHECK(!t.find("COMP", "Luser")->value.has_value());

    std::vector<RecommendationOutcome> o;
    const Segment segs[4] = {Segment::HuserPitem, Segment::LuserPitem, Segment::HuserUitem, Segment::LuserUitem};
    for (Index u = 0; u < 4; ++u) {
        o.push_back(outcome(u, 4, 3, u + 1, 10, segs[u]));
        o.push_back(outcome(u, 2, 3, 5, 10, segs[u]));
    }
    t = aggregate({}, {}, o);
    for (Index u = 0; u < 4; ++u) {
        const std::vector<RecommendationOutcome> mine = {o[2 * u], o[2 * u + 1]};
        CHECK(*t.find("Precision", to_string(segs[u]))->value == *precision_user(mine));
        CHECK(*t.find("AMI", to_string(segs[u]))->value == *ami_user(mine));
    }
    CHECK(t.entries.size() == 5 + 3 + 3 + 5 + 5);
}

TEST_CASE("aggregate counts AMI exclusions") {
    std::vector<RecommendationOutcome> o = {outcome(0, 4, 3, 0, 10), outcome(0, 4, 3, 2, 10)};
    const auto t = aggregate({}, {}, o);
    CHECK(t.ami_excluded == 1);
    CHECK(t.find("AMI", "Global")->support == 1);
    CHECK(t.find("Precision", "Global")->support == 2);
}

TEST_CASE("csv layout") {
    std::vector<ScoredLog> s = {{0, 0, 3, 3.5, Segment::HuserPitem}};
    const auto csv = to_csv(aggregate(s, {}, {}));
    CHECK(csv.rfind("function,metric,segment,value,support\nDecide,RMSE,HuserPitem,0.5,1\n", 0) == 0);
    CHECK(csv.find("Decide,RMSE,LuserPitem,,0\n") != std::string::npos);
}
