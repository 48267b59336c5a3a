#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "exitsim/dataset.hpp"
#include "exitsim/types.hpp"
#include "generators.hpp"

using namespace exitsim;

#ifndef EXITSIM_FIXTURE_DIR
#define EXITSIM_FIXTURE_DIR "tests/fixtures"
#endif

namespace {

const std::string kFixtureDir = EXITSIM_FIXTURE_DIR;

// Frozen after the fixture was first generated; a digest change means the
// committed file changed.
const std::string kMini10Digest = "c1375da8d36a0eec";

// Frozen membership of the seed-42 randomized 70/30 split of mini_10; pins
// shuffle portability across platforms and releases.
const std::vector<std::string> kSeed42Train = {"m04", "m05", "m06", "m07", "m08", "m09", "m10"};
const std::vector<std::string> kSeed42Test = {"m01", "m02", "m03"};

std::string minimal_line(const std::string& id, long long entry_time) {
    return "{\"trade_id\":\"" + id + "\",\"symbol\":\"X\",\"side\":\"long\",\"entry_time\":" +
           std::to_string(entry_time) +
           ",\"entry_price\":100,\"path\":[{\"t\":" + std::to_string(entry_time + 60000) +
           ",\"p\":101.5}]}";
}

std::vector<std::string> ids_of(const Dataset& d) {
    std::vector<std::string> ids;
    for (const auto& t : d.trades) ids.push_back(t.trade_id);
    return ids;
}

}  // namespace

TEST_CASE("mini_10 fixture loads with the committed digest") {
    const Dataset d = load_dataset(kFixtureDir + "/mini_10.jsonl");
    CHECK(d.size() == 10);
    CHECK(d.source_digest == kMini10Digest);
    for (std::size_t i = 1; i < d.trades.size(); ++i)
        CHECK(d.trades[i - 1].entry_time <= d.trades[i].entry_time);
}

TEST_CASE("out-of-order records are sorted by entry time") {
    const std::string content = minimal_line("c", 3000) + "\n" + minimal_line("a", 1000) + "\n" +
                                minimal_line("b", 2000) + "\n";
    const Dataset d = load_dataset_from_string(content);
    CHECK(ids_of(d) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("equal entry times fall back to trade_id order") {
    const std::string content = minimal_line("z", 1000) + "\n" + minimal_line("a", 1000) + "\n";
    const Dataset d = load_dataset_from_string(content);
    CHECK(ids_of(d) == std::vector<std::string>{"a", "z"});
}

TEST_CASE("loader rejects broken input") {
    SUBCASE("empty file") {
        CHECK_THROWS_AS(load_dataset_from_string(""), EmptyDataset);
        CHECK_THROWS_AS(load_dataset_from_string("\n  \n"), EmptyDataset);
    }
    SUBCASE("garbage line carries its line number") {
        const std::string content = minimal_line("a", 1000) + "\nnot json\n";
        try {
            load_dataset_from_string(content);
            FAIL("expected MalformedRecord");
        } catch (const MalformedRecord& e) {
            CHECK(e.line_no == 2);
        }
    }
    SUBCASE("missing field") {
        CHECK_THROWS_AS(load_dataset_from_string("{\"trade_id\":\"a\"}\n"), MalformedRecord);
    }
    SUBCASE("duplicate trade id") {
        const std::string content = minimal_line("a", 1000) + "\n" + minimal_line("a", 2000) + "\n";
        CHECK_THROWS_AS(load_dataset_from_string(content), DuplicateTradeId);
    }
    SUBCASE("non-positive price") {
        std::string line =
            "{\"trade_id\":\"a\",\"symbol\":\"X\",\"side\":\"long\",\"entry_time\":0,"
            "\"entry_price\":100,\"path\":[{\"t\":60000,\"p\":-1}]}";
        CHECK_THROWS_AS(load_dataset_from_string(line + "\n"), InvariantViolation);
    }
    SUBCASE("path timestamps not increasing") {
        std::string line =
            "{\"trade_id\":\"a\",\"symbol\":\"X\",\"side\":\"long\",\"entry_time\":0,"
            "\"entry_price\":100,\"path\":[{\"t\":60000,\"p\":1},{\"t\":60000,\"p\":2}]}";
        CHECK_THROWS_AS(load_dataset_from_string(line + "\n"), InvariantViolation);
    }
    SUBCASE("path before entry") {
        std::string line =
            "{\"trade_id\":\"a\",\"symbol\":\"X\",\"side\":\"long\",\"entry_time\":100000,"
            "\"entry_price\":100,\"path\":[{\"t\":60000,\"p\":1}]}";
        CHECK_THROWS_AS(load_dataset_from_string(line + "\n"), InvariantViolation);
    }
    SUBCASE("lookback must precede entry") {
        std::string line =
            "{\"trade_id\":\"a\",\"symbol\":\"X\",\"side\":\"long\",\"entry_time\":100000,"
            "\"entry_price\":100,\"path\":[{\"t\":160000,\"p\":1}],"
            "\"lookback\":[{\"t\":100000,\"p\":1}]}";
        CHECK_THROWS_AS(load_dataset_from_string(line + "\n"), InvariantViolation);
    }
}

TEST_CASE("decimal-string prices parse exactly like numbers") {
    std::string line =
        "{\"trade_id\":\"a\",\"symbol\":\"X\",\"side\":\"short\",\"entry_time\":0,"
        "\"entry_price\":\"123.456789012345\",\"path\":[{\"t\":60000,\"p\":120.0}]}";
    const Dataset d = load_dataset_from_string(line + "\n");
    CHECK(d.trades[0].entry_price == 123.456789012345);
    CHECK(d.trades[0].side == Side::Short);
}

TEST_CASE("serialize then load is the identity on trade content") {
    const Dataset original = load_dataset(kFixtureDir + "/mini_10.jsonl");
    const Dataset reloaded = load_dataset_from_string(serialize_dataset(original));
    REQUIRE(reloaded.size() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        const TradeRecord& a = original.trades[i];
        const TradeRecord& b = reloaded.trades[i];
        CHECK(a.trade_id == b.trade_id);
        CHECK(a.symbol == b.symbol);
        CHECK(a.side == b.side);
        CHECK(a.entry_time == b.entry_time);
        CHECK(a.entry_price == b.entry_price);
        REQUIRE(a.path.size() == b.path.size());
        for (std::size_t k = 0; k < a.path.size(); ++k) {
            CHECK(a.path[k].t == b.path[k].t);
            CHECK(a.path[k].price == b.path[k].price);
        }
        REQUIRE(a.lookback.size() == b.lookback.size());
        for (std::size_t k = 0; k < a.lookback.size(); ++k) {
            CHECK(a.lookback[k].t == b.lookback[k].t);
            CHECK(a.lookback[k].price == b.lookback[k].price);
        }
    }
    // serializing the reloaded dataset reproduces the same bytes
    CHECK(serialize_dataset(original) == serialize_dataset(reloaded));
}

TEST_CASE("chronological split takes the earliest trades") {
    const Dataset d = load_dataset(kFixtureDir + "/mini_10.jsonl");
    const SplitResult parts = split(d, SplitSpec{SplitMode::Chronological, 0.7, 0});
    REQUIRE(parts.train.size() == 7);
    REQUIRE(parts.test.size() == 3);
    CHECK(ids_of(parts.train) ==
          std::vector<std::string>{"m01", "m02", "m03", "m04", "m05", "m06", "m07"});
    CHECK(ids_of(parts.test) == std::vector<std::string>{"m08", "m09", "m10"});
}

TEST_CASE("two-trade chronological split yields one each") {
    const std::string content = minimal_line("a", 1000) + "\n" + minimal_line("b", 2000) + "\n";
    const Dataset d = load_dataset_from_string(content);
    const SplitResult parts = split(d, SplitSpec{SplitMode::Chronological, 0.7, 0});
    CHECK(parts.train.size() == 1);
    CHECK(parts.test.size() == 1);
    CHECK(parts.train.trades[0].trade_id == "a");
}

TEST_CASE("randomized split is a seed-stable partition") {
    const Dataset d = load_dataset(kFixtureDir + "/mini_10.jsonl");
    const SplitSpec spec{SplitMode::Randomized, 0.7, 42};
    const SplitResult first = split(d, spec);
    const SplitResult second = split(d, spec);

    CHECK(ids_of(first.train) == ids_of(second.train));
    CHECK(ids_of(first.test) == ids_of(second.test));
    CHECK(ids_of(first.train) == kSeed42Train);
    CHECK(ids_of(first.test) == kSeed42Test);

    // partition property
    const std::vector<std::string> all_ids = ids_of(d);
    std::set<std::string> all(all_ids.begin(), all_ids.end());
    std::set<std::string> seen;
    for (const auto& id : ids_of(first.train)) seen.insert(id);
    for (const auto& id : ids_of(first.test)) seen.insert(id);
    CHECK(seen == all);
    CHECK(first.train.size() + first.test.size() == d.size());

    // each side stays chronologically sorted
    for (const Dataset* part : {&first.train, &first.test})
        for (std::size_t i = 1; i < part->trades.size(); ++i)
            CHECK(part->trades[i - 1].entry_time <= part->trades[i].entry_time);

    // different seed, different partition (for this fixture)
    const SplitResult other = split(d, SplitSpec{SplitMode::Randomized, 0.7, 43});
    CHECK(ids_of(other.train) != ids_of(first.train));
}

TEST_CASE("split rejects undersized datasets and bad fractions") {
    const std::string content = minimal_line("a", 1000) + "\n";
    const Dataset d = load_dataset_from_string(content);
    CHECK_THROWS_AS(split(d, SplitSpec{SplitMode::Chronological, 0.7, 0}), InsufficientTrades);

    const Dataset d2 = load_dataset_from_string(content + minimal_line("b", 2000) + "\n");
    CHECK_THROWS_AS(split(d2, SplitSpec{SplitMode::Chronological, 1.0, 0}), ConfigError);
    CHECK_THROWS_AS(split(d2, SplitSpec{SplitMode::Chronological, 0.0, 0}), ConfigError);
}

TEST_CASE("split sizes follow floor(n * fraction) for random inputs") {
    Xoshiro256StarStar rng(5150);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(40);
        std::string content;
        for (std::size_t i = 0; i < n; ++i)
            content += minimal_line("t" + std::to_string(100 + i),
                                    static_cast<long long>(1000 * (i + 1))) + "\n";
        const Dataset d = load_dataset_from_string(content);
        const double fraction = 0.05 + rng.next_double() * 0.9;
        const SplitMode mode =
            rng.next_below(2) == 0 ? SplitMode::Chronological : SplitMode::Randomized;
        const SplitResult parts = split(d, SplitSpec{mode, fraction, rng.next()});
        const auto expected_train =
            static_cast<std::size_t>(static_cast<double>(n) * fraction);
        CHECK(parts.train.size() == expected_train);
        CHECK(parts.test.size() == n - expected_train);
    }
}

TEST_CASE("validate_file reports per-record issues without stopping") {
    const ValidationReport ok = validate_file(kFixtureDir + "/mini_10.jsonl");
    CHECK(ok.ok());
    CHECK(ok.n_valid == 10);
}

TEST_CASE("round-trip preserves full-precision prices on random datasets") {
    // prices with all 17 significant digits in play, lookbacks included
    Xoshiro256StarStar rng(240808);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TradeRecord> trades;
        const std::size_t n = 2 + rng.next_below(15);
        for (std::size_t i = 0; i < n; ++i) {
            TradeRecord t;
            t.trade_id = "p" + std::to_string(trial) + "_" + std::to_string(i);
            t.symbol = "X/Y";
            t.side = rng.next_below(2) == 0 ? Side::Long : Side::Short;
            t.entry_time = 1700000000000LL + static_cast<TimeMs>(rng.next_below(1u << 30));
            t.entry_price = rng.next_double() * 1000.0 + 1e-6;
            const std::size_t points = 1 + rng.next_below(6);
            for (std::size_t k = 0; k < points; ++k)
                t.path.push_back({t.entry_time + static_cast<TimeMs>(k + 1) * 60000,
                                  rng.next_double() * 900.0 + 1e-6});
            if (rng.next_below(2) == 0)
                for (std::size_t k = 0; k < 3; ++k)
                    t.lookback.push_back(
                        {t.entry_time - static_cast<TimeMs>(3 - k) * 60000,
                         rng.next_double() * 900.0 + 1e-6});
            trades.push_back(std::move(t));
        }
        const Dataset original = make_dataset(std::move(trades));
        const Dataset reloaded = load_dataset_from_string(serialize_dataset(original));
        REQUIRE(reloaded.size() == original.size());
        for (std::size_t i = 0; i < original.size(); ++i) {
            CHECK(reloaded.trades[i].entry_price == original.trades[i].entry_price);
            REQUIRE(reloaded.trades[i].path.size() == original.trades[i].path.size());
            for (std::size_t k = 0; k < original.trades[i].path.size(); ++k)
                CHECK(reloaded.trades[i].path[k].price == original.trades[i].path[k].price);
            REQUIRE(reloaded.trades[i].lookback.size() == original.trades[i].lookback.size());
            for (std::size_t k = 0; k < original.trades[i].lookback.size(); ++k)
                CHECK(reloaded.trades[i].lookback[k].price ==
                      original.trades[i].lookback[k].price);
        }
    }
}
