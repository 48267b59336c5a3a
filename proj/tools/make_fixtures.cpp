// Regenerates the committed test fixtures (tests/fixtures/*.jsonl).
// Output is fully deterministic; run with the target directory as the only
// argument. Committed copies are the source of truth for golden tests, so
// regenerate only when the fixture design itself changes.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "exitsim/dataset.hpp"
#include "exitsim/rng.hpp"
#include "exitsim/types.hpp"

using namespace exitsim;

namespace {

constexpr TimeMs kStep = 15 * 60 * 1000;  // 15-minute snapshot cadence

double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

std::vector<PricePoint> path_from_prices(TimeMs entry_time, const std::vector<double>& prices) {
    std::vector<PricePoint> path;
    path.reserve(prices.size());
    for (std::size_t k = 0; k < prices.size(); ++k)
        path.push_back({entry_time + static_cast<TimeMs>(k + 1) * kStep, prices[k]});
    return path;
}

std::vector<PricePoint> make_lookback(TimeMs entry_time, double entry_price, int n,
                                      std::uint64_t salt) {
    Xoshiro256StarStar rng(salt);
    std::vector<double> prices(static_cast<std::size_t>(n));
    double price = entry_price;
    for (int k = n - 1; k >= 0; --k) {  // walk backwards from entry
        price *= 1.0 + (rng.next_double() - 0.5) * 0.01;
        prices[static_cast<std::size_t>(k)] = round4(price);
    }
    std::vector<PricePoint> points;
    points.reserve(prices.size());
    for (int k = 0; k < n; ++k)
        points.push_back({entry_time - static_cast<TimeMs>(n - k) * kStep,
                          prices[static_cast<std::size_t>(k)]});
    return points;
}

// Ten hand-shaped trades covering each exit rule under the baseline
// configuration: clean stop, gap-through stop, trailing exits above and
// below entry, partial take-profit combinations, stale closes, path ends.
std::vector<TradeRecord> build_mini10() {
    const TimeMs base = 1709251200000;  // 2024-03-01T00:00:00Z
    const TimeMs gap = 49 * kMsPerHour;
    std::vector<TradeRecord> trades;
    auto add = [&](int idx, double entry_price, const std::vector<double>& prices,
                   bool with_lookback) {
        TradeRecord t;
        char id[8];
        std::snprintf(id, sizeof(id), "m%02d", idx);
        t.trade_id = id;
        t.symbol = std::vector<std::string>{"BTC-USD", "ETH-USD", "SOL-USD"}
            [static_cast<std::size_t>(idx - 1) % 3];
        t.side = Side::Long;
        t.entry_time = base + (idx - 1) * gap;
        t.entry_price = entry_price;
        t.path = path_from_prices(t.entry_time, prices);
        if (with_lookback)
            t.lookback = make_lookback(t.entry_time, entry_price, 20,
                                       static_cast<std::uint64_t>(idx) * 7919);
        trades.push_back(std::move(t));
    };

    add(1, 100.0, {101.0, 103.0, 105.2, 108.0, 99.0}, true);
    add(2, 50.0, {49.0, 47.0, 44.0, 37.4}, false);
    add(3, 200.0, {202.0, 204.0, 203.0, 201.0, 199.0, 198.0}, false);
    add(4, 20.0, {20.2, 20.7, 21.2, 20.7}, false);
    std::vector<double> hover150;
    for (int k = 0; k < 100; ++k) hover150.push_back(round4(150.0 + 2.0 * std::sin(k / 5.0)));
    add(5, 150.0, hover150, true);
    add(6, 80.0, {81.0, 78.0, 59.0}, false);
    std::vector<double> hover125 = {122.0, 126.5};
    for (int k = 2; k < 100; ++k) hover125.push_back(round4(125.0 + 0.5 * std::sin(k / 3.0)));
    add(7, 120.0, hover125, true);
    add(8, 60.0, {59.0, 58.8, 60.6, 63.0, 66.0, 64.5}, false);
    add(9, 250.0, {257.5, 245.0}, false);
    add(10, 40.0, {42.2, 42.6, 42.4}, false);
    return trades;
}

// ~100 synthetic trades over about four months: geometric random walks with
// a mild upward bias, occasional gaps, mixed holding horizons, lookback
// history on most trades.
std::vector<TradeRecord> build_regression100() {
    const TimeMs base = 1704412800000;  // 2024-01-05T00:00:00Z
    const char* symbols[6] = {"BTC-USD", "ETH-USD", "SOL-USD", "AVAX-USD", "DOGE-USD", "LINK-USD"};
    Xoshiro256StarStar rng(20240105);
    std::vector<TradeRecord> trades;
    trades.reserve(100);
    for (int i = 0; i < 100; ++i) {
        TradeRecord t;
        char id[8];
        std::snprintf(id, sizeof(id), "r%04d", i + 1);
        t.trade_id = id;
        t.symbol = symbols[i % 6];
        t.side = Side::Long;
        t.entry_time = base + static_cast<TimeMs>(i) * 29 * kMsPerHour +
                       static_cast<TimeMs>(rng.next_below(6 * 60)) * 60 * 1000;
        t.entry_price = round4(0.5 * std::exp(rng.next_double() * 6.9));  // ~0.5 .. ~500
        if (t.entry_price < 0.5) t.entry_price = 0.5;

        const std::size_t n = 16 + rng.next_below(273);  // 4h .. 68h of 15-min snapshots
        const double mu = -0.0004 + rng.next_double() * 0.0017;
        const double sigma = 0.002 + rng.next_double() * 0.013;
        std::vector<double> prices;
        prices.reserve(n);
        double p = t.entry_price;
        for (std::size_t k = 0; k < n; ++k) {
            // Irwin-Hall(4) noise, roughly normal with unit variance
            double z = 0.0;
            for (int u = 0; u < 4; ++u) z += rng.next_double();
            z = (z - 2.0) * std::sqrt(3.0);
            double factor = 1.0 + mu + sigma * z;
            if (rng.next_below(100) < 4) {
                const double jump = 0.03 + rng.next_double() * 0.06;
                factor *= rng.next_below(2) == 0 ? 1.0 + jump : 1.0 - jump;
            }
            p *= std::max(0.5, factor);
            prices.push_back(std::max(round4(p), 0.0001));
        }
        t.path = path_from_prices(t.entry_time, prices);
        if (rng.next_below(100) < 70)
            t.lookback = make_lookback(t.entry_time, t.entry_price, 20,
                                       20240105ULL + static_cast<std::uint64_t>(i));
        trades.push_back(std::move(t));
    }
    return trades;
}

void write_jsonl(const std::string& path, const std::vector<TradeRecord>& trades) {
    std::string out;
    for (const auto& t : trades) {
        out += trade_to_json(t).dump();
        out += '\n';
    }
    std::ofstream file(path, std::ios::binary);
    file << out;
    std::printf("wrote %zu trades to %s\n", trades.size(), path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "tests/fixtures";
    write_jsonl(dir + "/mini_10.jsonl", build_mini10());
    write_jsonl(dir + "/regression_100.jsonl", build_regression100());
    return 0;
}
