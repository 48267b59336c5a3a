#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "exitsim/errors.hpp"
#include "exitsim/types.hpp"

namespace exitsim {

// Optional price levels injected by the ATR overlay. AtrStop uses the
// stop-like fill convention, AtrTakeProfit the limit-like one and closes
// the whole remaining fraction.
struct ExtraLevels {
    std::optional<double> atr_stop;
    std::optional<double> atr_take_profit;
};

namespace detail {

// Unrealized return of a price against the entry; short side mirrors sign.
inline double unrealized(Side side, double entry, double price) {
    return side == Side::Long ? (price - entry) / entry : (entry - price) / entry;
}

// Stop-like rules fill at the worse of trigger level and snapshot price
// (a gap through the level fills at the snapshot, like a market order).
inline double stop_fill_price(Side side, double level, double snapshot) {
    return side == Side::Long ? std::min(level, snapshot) : std::max(level, snapshot);
}

}  // namespace detail

// Replays one trade's price path under the exit rules and returns the fills
// and aggregate outcome. Snapshots are processed in timestamp order; within a
// snapshot, triggers are evaluated in the fixed priority
//   StopLoss -> AtrStop -> TrailingStop -> PartialTakeProfit
//            -> AtrTakeProfit -> StaleClose
// so loss-side rules win when several cross at once. The intra-snapshot path
// is unobservable in this data model, which makes the pessimistic ordering
// the default; the priority is fixed here, not configurable.
//
// Trigger comparisons happen in return-fraction space with tolerance
// kTriggerEps. The trailing peak is tracked from entry (pre-activation
// snapshots included); the trail exit only goes live once unrealized gain
// has touched trail_activation. PartialTakeProfit fires at most once and
// the stop-loss stays anchored to entry_price afterwards.
//
// `sizing` does not alter path arithmetic; it is the position-size fraction
// the circuit breaker assigns and is applied by callers when converting
// returns to PnL.
inline TradeOutcome simulate_trade(const TradeRecord& trade, const ExitConfig& config,
                                   double sizing = 1.0, const ExtraLevels& extra = {}) {
    validate_config(config);
    if (!(sizing > 0.0 && sizing <= 1.0)) throw ConfigError("sizing must be in (0,1]");
    if (trade.path.empty()) throw EmptyPath(trade.trade_id);
    if (!(trade.entry_price > 0.0)) throw NonPositivePrice("entry of trade " + trade.trade_id);

    const Side side = trade.side;
    const double entry = trade.entry_price;
    const double sign = side == Side::Long ? 1.0 : -1.0;

    const double stop_level = entry * (1.0 - sign * config.stop_loss);
    const double ptp_level = entry * (1.0 + sign * config.ptp_threshold);
    const TimeMs stale_deadline =
        trade.entry_time +
        static_cast<TimeMs>(std::llround(config.stale_hours * static_cast<double>(kMsPerHour)));

    TradeOutcome outcome;
    outcome.trade_id = trade.trade_id;

    double open_fraction = 1.0;
    double trail_peak = entry;  // best price seen since entry: max long, min short
    bool trailing_armed = false;
    bool ptp_fired = false;
    double peak_ret = -std::numeric_limits<double>::infinity();

    auto ret = [&](double price) { return detail::unrealized(side, entry, price); };
    auto emit = [&](TimeMs t, double price, double fraction, FillReason reason) {
        outcome.fills.push_back({t, price, fraction, reason});
        outcome.realized_return += fraction * ret(price);
        peak_ret = std::max(peak_ret, ret(price));
        open_fraction -= fraction;
    };

    for (const auto& snap : trade.path) {
        if (!(snap.price > 0.0)) throw NonPositivePrice("path of trade " + trade.trade_id);
        const double p = snap.price;
        const double r = ret(p);
        peak_ret = std::max(peak_ret, r);
        trail_peak = side == Side::Long ? std::max(trail_peak, p) : std::min(trail_peak, p);
        if (!trailing_armed && r >= config.trail_activation - kTriggerEps) trailing_armed = true;

        if (r <= -config.stop_loss + kTriggerEps) {
            emit(snap.t, detail::stop_fill_price(side, stop_level, p), open_fraction,
                 FillReason::StopLoss);
            break;
        }
        if (extra.atr_stop && r <= ret(*extra.atr_stop) + kTriggerEps) {
            emit(snap.t, detail::stop_fill_price(side, *extra.atr_stop, p), open_fraction,
                 FillReason::AtrStop);
            break;
        }
        if (trailing_armed) {
            const double retrace = sign * (trail_peak - p) / trail_peak;
            if (retrace >= config.trail_distance - kTriggerEps) {
                const double trail_level = trail_peak * (1.0 - sign * config.trail_distance);
                emit(snap.t, detail::stop_fill_price(side, trail_level, p), open_fraction,
                     FillReason::TrailingStop);
                break;
            }
        }
        if (!ptp_fired && r >= config.ptp_threshold - kTriggerEps) {
            ptp_fired = true;
            // Limit-style fill at the trigger level exactly, never better.
            emit(snap.t, ptp_level, std::min(config.ptp_fraction, open_fraction),
                 FillReason::PartialTakeProfit);
            if (open_fraction <= 0.0) break;
        }
        if (extra.atr_take_profit && r >= ret(*extra.atr_take_profit) - kTriggerEps) {
            emit(snap.t, *extra.atr_take_profit, open_fraction, FillReason::AtrTakeProfit);
            break;
        }
        if (snap.t >= stale_deadline) {
            emit(snap.t, p, open_fraction, FillReason::StaleClose);
            break;
        }
    }

    if (open_fraction > 0.0)
        emit(trade.path.back().t, trade.path.back().price, open_fraction, FillReason::PathEnd);

    outcome.exit_reason = outcome.fills.back().reason;
    outcome.peak_unrealized_return = peak_ret;
    // The gap is non-negative by construction; the max() only absorbs
    // last-ulp rounding in the weighted realized sum.
    outcome.capture_gap = std::max(0.0, peak_ret - outcome.realized_return);
    outcome.holding_hours = hours_between(trade.entry_time, outcome.fills.back().t);
    return outcome;
}

// Maps simulate_trade over the dataset in order with sizing = 1.
inline std::vector<TradeOutcome> replay_portfolio(const Dataset& dataset,
                                                  const ExitConfig& config) {
    std::vector<TradeOutcome> outcomes;
    outcomes.reserve(dataset.size());
    for (const auto& trade : dataset.trades) outcomes.push_back(simulate_trade(trade, config));
    return outcomes;
}

}  // namespace exitsim
