#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "generators.hpp"
#include "oracle.hpp"
#include "recoeval/dataset.hpp"
#include "recoeval/fixtures.hpp"

using namespace recoeval;

namespace {

const std::filesystem::path kData = RECOEVAL_TEST_DATA;

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto p = std::filesystem::temp_directory_path() / ("recoeval-test-" + name);
    std::ofstream(p) << text;
    return p;
}

std::vector<RatingLog> logs_of(std::initializer_list<std::tuple<const char*, const char*, double>> rows) {
    std::vector<RatingLog> out;
    for (const auto& [u, i, r] : rows) out.push_back({u, i, r, std::nullopt});
    return out;
}

}  // namespace

TEST_CASE("csv with header and timestamps") {
    const auto r = load_dataset(kData / "three.csv", DatasetFormat::Csv);
    REQUIRE(r.logs.size() == 3);
    CHECK(r.logs[2].user_id == "2");
    CHECK(r.logs[2].item_id == "10");
    CHECK(r.logs[2].rating == 5.0);
    CHECK(r.logs[2].timestamp == 102);
    CHECK(r.duplicates_dropped == 0);
}

TEST_CASE("csv duplicates keep the last rating") {
    const auto r = load_dataset(kData / "dupes.csv", DatasetFormat::Csv);
    REQUIRE(r.logs.size() == 2);
    CHECK(r.duplicates_dropped == 1);
    const auto it = std::find_if(r.logs.begin(), r.logs.end(), [](auto& l) { return l.user_id == "u1"; });
    REQUIRE(it != r.logs.end());
    CHECK(it->rating == 5.0);
}

TEST_CASE("netflix file") {
    const auto r = load_dataset(kData / "mv_0000001.txt", DatasetFormat::Netflix);
    REQUIRE(r.logs.size() == 2);
    for (const auto& l : r.logs) CHECK(l.item_id == "1");
    CHECK(r.logs[0].user_id == "1488844");
    CHECK(r.logs[0].rating == 3.0);
}

TEST_CASE("netflix directory") {
    const auto dir = std::filesystem::temp_directory_path() / "recoeval-test-nf";
    std::filesystem::create_directories(dir);
    std::filesystem::copy_file(kData / "mv_0000001.txt", dir / "mv_0000001.txt",
                               std::filesystem::copy_options::overwrite_existing);
    std::ofstream(dir / "mv_0000002.txt") << "2:\n7,1,2005-01-01\n";
    const auto r = load_dataset(dir, DatasetFormat::Netflix);
    CHECK(r.logs.size() == 3);
}

TEST_CASE("malformed input is a dataset error") {
    CHECK_THROWS_AS((void)load_dataset(write_temp("a.csv", "1,2,3\n1,2\n"), DatasetFormat::Csv), DatasetError);
    CHECK_THROWS_AS((void)load_dataset(write_temp("b.csv", "1,2,3\n1,3,x\n"), DatasetFormat::Csv), DatasetError);
    CHECK_THROWS_AS((void)load_dataset(write_temp("c.csv", "1,2,6\n"), DatasetFormat::Csv), DatasetError);
    CHECK_THROWS_AS((void)load_dataset(write_temp("d.csv", "1,2,3,soon\n"), DatasetFormat::Csv), DatasetError);
    CHECK_THROWS_AS((void)load_dataset(kData / "missing.csv", DatasetFormat::Csv), DatasetError);
    CHECK_THROWS_AS((void)load_dataset(write_temp("e.txt", "7,1,2005-01-01\n"), DatasetFormat::Netflix), DatasetError);
    try {
        (void)load_dataset(write_temp("f.csv", "1,2,3\n1,3,3\n1,4\n"), DatasetFormat::Csv);
        FAIL("expected an error");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
}

TEST_CASE("id ordering") {
    CHECK(id_less("2", "10"));
    CHECK(!id_less("10", "2"));
    CHECK(id_less("99", "a"));
    CHECK(id_less("a10", "a2"));
    CHECK(!id_less("7", "7"));
    gen::Rng rng(5);
    for (int k = 0; k < 2000; ++k) {
        const auto a = gen::make_id(rng, 'x', rng.integer(0, 50));
        const auto b = gen::make_id(rng, 'x', rng.integer(0, 50));
        CHECK(id_less(a, b) == oracle::id_before(a, b));
    }
}

TEST_CASE("split size and determinism") {
    std::vector<RatingLog> logs;
    for (int k = 0; k < 10000; ++k) logs.push_back({std::to_string(k / 40), std::to_string(k % 40 + 1000 * (k / 40 % 3)), 3.0, std::nullopt});
    const auto a = split(logs, 0.9, 42);
    CHECK(a.train().size() >= 8900);
    CHECK(a.train().size() <= 9100);
    CHECK(a.train().size() + a.test().size() == logs.size());
    const auto b = split(logs, 0.9, 42);
    CHECK(a.train_logs().size() == b.train_logs().size());
    bool same = true;
    for (std::size_t k = 0; k < a.test_logs().size(); ++k) {
        same = same && a.test_logs()[k].user_id == b.test_logs()[k].user_id &&
               a.test_logs()[k].item_id == b.test_logs()[k].item_id;
    }
    CHECK(same);
    const auto c = split(logs, 0.9, 43);
    CHECK(c.train_logs().size() != a.train_logs().size());
}

TEST_CASE("split preconditions") {
    const auto logs = logs_of({{"1", "1", 3}});
    CHECK_THROWS_AS((void)split({}, 0.9, 1), DatasetError);
    CHECK_THROWS_AS((void)split(logs, 0.0, 1), ConfigError);
    CHECK_THROWS_AS((void)split(logs, 1.0, 1), ConfigError);
}

TEST_CASE("split dataset rejects overlap and duplicates") {
    CHECK_THROWS_AS(SplitDataset(logs_of({{"1", "1", 3}}), logs_of({{"1", "1", 4}}), {}), DatasetError);
    CHECK_THROWS_AS(SplitDataset(logs_of({{"1", "1", 3}, {"1", "1", 4}}), {}, {}), DatasetError);
}

TEST_CASE("catalog is the union of train and test items") {
    const SplitDataset d(logs_of({{"1", "a", 3}, {"2", "b", 4}}), logs_of({{"1", "c", 5}}), {});
    CHECK(d.catalog_size() == 3);
    CHECK(d.items().id(0) == "a");
}

TEST_CASE("thresholds follow the strict mean rule") {
    SUBCASE("counts 10 and 20") {
        std::vector<RatingLog> train;
        for (int k = 0; k < 10; ++k) train.push_back({"1", std::to_string(k), 3.0, std::nullopt});
        for (int k = 0; k < 20; ++k) train.push_back({"2", std::to_string(k), 3.0, std::nullopt});
        const SplitDataset d(train, {}, {});
        const auto m = build_segment_model(d);
        CHECK(m.user_threshold == 15.0);
        CHECK(m.user_class(*d.users().find("1")) == UserClass::Light);
        CHECK(m.user_class(*d.users().find("2")) == UserClass::Heavy);
    }
    SUBCASE("all counts equal the mean") {
        std::vector<RatingLog> train;
        for (int u = 0; u < 4; ++u) {
            for (int k = 0; k < 7; ++k) train.push_back({std::to_string(u), std::to_string(k), 4.0, std::nullopt});
        }
        const SplitDataset d(train, {}, {});
        const auto m = build_segment_model(d);
        CHECK(m.user_threshold == 7.0);
        for (Index u = 0; u < 4; ++u) CHECK(m.user_class(u) == UserClass::Light);
    }
}

TEST_CASE("segment of known and absent entities") {
    std::vector<RatingLog> train;
    for (int k = 0; k < 100; ++k) train.push_back({"u" + std::to_string(k), "p", 4.0, std::nullopt});
    const SplitDataset d(train, logs_of({{"stranger", "novel", 3}}), {});
    const auto m = build_segment_model(d);
    const auto stranger = *d.users().find("stranger");
    const auto novel = *d.items().find("novel");
    CHECK(segment_of(m, stranger, novel) == Segment::LuserUitem);
    CHECK(m.item_class(*d.items().find("p")) == ItemClass::Unpopular);  // 100 is not above 100
    CHECK(segment_of(m, kNoIndex, kNoIndex) == Segment::LuserUitem);

    std::vector<RatingLog> t2;
    for (int k = 0; k < 20; ++k) t2.push_back({"heavy", "x" + std::to_string(k), 4.0, std::nullopt});
    for (int k = 0; k < 10; ++k) t2.push_back({"light", "x" + std::to_string(k), 4.0, std::nullopt});
    for (int k = 0; k < 100; ++k) t2.push_back({"f" + std::to_string(k), "x0", 4.0, std::nullopt});
    const SplitDataset d2(t2, {}, {});
    const auto m2 = build_segment_model(d2);
    // heavy: 20 logs vs threshold 130/102; x0: 102 logs vs threshold 130/20
    CHECK(segment_of(m2, *d2.users().find("heavy"), *d2.items().find("x0")) == Segment::HuserPitem);
}

TEST_CASE("segment model matches the oracle on random cases") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto c = gen::small_case(seed);
        const SplitDataset d(c.train, c.test, {});
        const auto m = build_segment_model(d);
        const oracle::Stats s(c.train);
        CHECK(m.user_threshold == doctest::Approx(s.user_threshold).epsilon(1e-14));
        CHECK(m.item_threshold == doctest::Approx(s.item_threshold).epsilon(1e-14));
        for (const auto& l : c.test) {
            const auto seg = segment_of(m, *d.users().find(l.user_id), *d.items().find(l.item_id));
            CHECK(std::string(to_string(seg)) == s.segment(l.user_id, l.item_id));
            CHECK(m.user_mean(*d.users().find(l.user_id)) == doctest::Approx(s.user_mean(l.user_id)).epsilon(1e-14));
        }
    }
}

TEST_CASE("fixtures are deterministic and in range") {
    for (const auto kind : {FixtureKind::LowRank, FixtureKind::RankOne, FixtureKind::Uniform, FixtureKind::TwoCluster,
                            FixtureKind::Clustered}) {
        FixtureSpec spec;
        spec.kind = kind;
        spec.users = 60;
        spec.items = 30;
        spec.density = 0.2;
        const auto a = generate_fixture(spec);
        const auto b = generate_fixture(spec);
        REQUIRE(a.size() == b.size());
        CHECK(!a.empty());
        std::set<std::pair<std::string, std::string>> pairs;
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].rating == b[k].rating);
            CHECK(spec.scale.contains(a[k].rating));
            CHECK(a[k].rating == std::round(a[k].rating));
            pairs.emplace(a[k].user_id, a[k].item_id);
        }
        CHECK(pairs.size() == a.size());
    }
    CHECK_THROWS_AS((void)parse_fixture_kind("nope"), ConfigError);
}
