#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "exitsim/errors.hpp"
#include "exitsim/exit_engine.hpp"
#include "exitsim/types.hpp"

namespace exitsim {

// ATR over a snapshot series. The data model has no OHLC bars, so the true
// range per step is |p_t - p_{t-1}| and smoothing is Wilder's: seeded with
// the arithmetic mean of the first `period` true ranges, then
// atr = (atr*(period-1) + tr) / period for each later step. Series shorter
// than period+1 points fall back to the mean of the available true ranges.
inline AtrEstimate compute_atr(const std::vector<PricePoint>& points, int period = 14) {
    if (points.size() < 2) throw InsufficientPoints(points.size());
    if (period < 1) throw ConfigError("atr period must be >= 1");

    std::vector<double> ranges;
    ranges.reserve(points.size() - 1);
    for (std::size_t i = 1; i < points.size(); ++i)
        ranges.push_back(std::abs(points[i].price - points[i - 1].price));

    AtrEstimate est;
    const auto p = static_cast<std::size_t>(period);
    if (ranges.size() <= p) {
        double sum = 0.0;
        for (double r : ranges) sum += r;
        est.value = sum / static_cast<double>(ranges.size());
        est.n_periods = static_cast<int>(ranges.size());
        return est;
    }
    double atr = 0.0;
    for (std::size_t i = 0; i < p; ++i) atr += ranges[i];
    atr /= static_cast<double>(p);
    for (std::size_t i = p; i < ranges.size(); ++i)
        atr = (atr * static_cast<double>(period - 1) + ranges[i]) / static_cast<double>(period);
    est.value = atr;
    est.n_periods = period;
    return est;
}

// ATR frozen at entry: taken from the pre-entry lookback when it has at
// least two points, otherwise warmed up from the entry price followed by
// the first `period` path snapshots.
inline AtrEstimate atr_for_trade(const TradeRecord& trade, int period = 14) {
    if (trade.lookback.size() >= 2) {
        AtrEstimate est = compute_atr(trade.lookback, period);
        est.source = AtrEstimate::Source::Lookback;
        return est;
    }
    std::vector<PricePoint> warmup;
    warmup.reserve(static_cast<std::size_t>(period) + 1);
    warmup.push_back({trade.entry_time, trade.entry_price});
    for (const auto& pt : trade.path) {
        if (warmup.size() > static_cast<std::size_t>(period)) break;
        warmup.push_back(pt);
    }
    AtrEstimate est = compute_atr(warmup, period);
    est.source = AtrEstimate::Source::PathWarmup;
    return est;
}

// Per-trade overlay annotations for reporting.
struct OverlayTradeInfo {
    double sizing{1.0};
    double atr_value{0.0};
    bool atr_levels_active{false};
    double atr_stop_level{0.0};
    double atr_tp_level{0.0};
};

struct OverlayRun {
    std::vector<TradeOutcome> outcomes;
    std::vector<double> sized_pnl;
    std::vector<OverlayTradeInfo> info;         // aligned with outcomes
    std::vector<std::string> zero_atr_trades;   // ATR levels disabled for these
};

namespace detail {

// Consecutive-loss count just before each trade's entry. Only trades already
// closed (final fill strictly before the entry) contribute; the counter runs
// over those trades in exit-time order and resets on any realized_return >= 0.
inline std::vector<int> losses_before_entry(const Dataset& dataset,
                                            const std::vector<TradeOutcome>& outcomes) {
    const std::size_t n = outcomes.size();
    struct Exit {
        TimeMs t;
        const std::string* id;
        bool loss;
    };
    std::vector<Exit> exits;
    exits.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        exits.push_back({outcomes[i].exit_time(), &outcomes[i].trade_id,
                         outcomes[i].realized_return < 0.0});
    std::stable_sort(exits.begin(), exits.end(), [](const Exit& a, const Exit& b) {
        if (a.t != b.t) return a.t < b.t;
        return *a.id < *b.id;
    });

    // run[k] = consecutive losses ending at exit k (inclusive)
    std::vector<int> run(n, 0);
    for (std::size_t k = 0; k < n; ++k)
        run[k] = exits[k].loss ? (k > 0 ? run[k - 1] : 0) + 1 : 0;

    std::vector<int> result(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const TimeMs entry = dataset.trades[i].entry_time;
        // last exit strictly before this entry
        std::size_t lo = 0, hi = n;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (exits[mid].t < entry) lo = mid + 1;
            else hi = mid;
        }
        result[i] = lo > 0 ? run[lo - 1] : 0;
    }
    return result;
}

}  // namespace detail

// Second-pass simulation: injects ATR stop/take-profit levels (frozen at
// entry) into the base rule set and applies the sequence-level circuit
// breaker to position sizing. A trade whose ATR estimate is zero (constant
// warmup prices) would get levels at the entry price itself, so both ATR
// levels are disabled for it and the trade id is recorded as a diagnostic.
inline OverlayRun simulate_with_overlay(const Dataset& dataset, const ExitConfig& base,
                                        const OverlayConfig& overlay, double notional) {
    validate_config(base);
    validate_config(overlay);
    if (!(notional > 0.0)) throw ConfigError("notional must be positive");

    const std::size_t n = dataset.size();
    OverlayRun run;
    run.outcomes.reserve(n);
    run.sized_pnl.reserve(n);
    run.info.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const TradeRecord& trade = dataset.trades[i];
        const AtrEstimate atr = atr_for_trade(trade, overlay.atr_period);
        const double sign = trade.side == Side::Long ? 1.0 : -1.0;

        ExtraLevels levels;
        OverlayTradeInfo& info = run.info[i];
        info.atr_value = atr.value;
        if (atr.value > 0.0) {
            info.atr_levels_active = true;
            info.atr_stop_level = trade.entry_price - sign * overlay.atr_stop_mult * atr.value;
            info.atr_tp_level = trade.entry_price + sign * overlay.atr_tp_mult * atr.value;
            levels.atr_stop = info.atr_stop_level;
            levels.atr_take_profit = info.atr_tp_level;
        } else {
            run.zero_atr_trades.push_back(trade.trade_id);
        }
        run.outcomes.push_back(simulate_trade(trade, base, 1.0, levels));
    }

    const std::vector<int> losses = detail::losses_before_entry(dataset, run.outcomes);
    for (std::size_t i = 0; i < n; ++i) {
        double sizing = 1.0;
        if (overlay.breaker_enabled() && losses[i] >= overlay.cb_loss_threshold)
            sizing = *overlay.cb_reduction_factor;
        run.info[i].sizing = sizing;
        run.sized_pnl.push_back(notional * sizing * run.outcomes[i].realized_return);
    }
    return run;
}

}  // namespace exitsim
