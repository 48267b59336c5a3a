#pragma once

// Naive reference simulator used as the oracle for engine equivalence tests.
// Written independently of the engine on purpose: no shared evaluation code,
// no incremental state. At every snapshot it rescans the whole prefix to
// derive the trailing peak and the armed flag, then walks the documented
// rule priority. Keep it simple and obviously correct; never optimize it.

#include <algorithm>
#include <cmath>
#include <vector>

#include "exitsim/types.hpp"

namespace refsim {

using exitsim::ExitConfig;
using exitsim::Fill;
using exitsim::FillReason;
using exitsim::kTriggerEps;
using exitsim::Side;
using exitsim::TimeMs;
using exitsim::TradeOutcome;
using exitsim::TradeRecord;

struct RefLevels {
    bool has_atr = false;
    double atr_stop = 0.0;
    double atr_take_profit = 0.0;
};

inline double ref_return(Side side, double entry, double price) {
    if (side == Side::Long) return (price - entry) / entry;
    return (entry - price) / entry;
}

inline TradeOutcome reference_simulate(const TradeRecord& trade, const ExitConfig& cfg,
                                       const RefLevels& levels = {}) {
    const bool is_long = trade.side == Side::Long;
    const double entry = trade.entry_price;
    const TimeMs deadline =
        trade.entry_time +
        static_cast<TimeMs>(std::llround(cfg.stale_hours * 3'600'000.0));

    std::vector<Fill> fills;
    double open = 1.0;
    bool ptp_done = false;
    std::size_t processed = 0;

    for (std::size_t k = 0; k < trade.path.size() && open > 0.0; ++k) {
        const double p = trade.path[k].price;
        const TimeMs t = trade.path[k].t;
        processed = k + 1;

        // trailing peak over entry and every snapshot up to k
        double peak = entry;
        for (std::size_t j = 0; j <= k; ++j) {
            const double q = trade.path[j].price;
            peak = is_long ? std::max(peak, q) : std::min(peak, q);
        }
        // armed once any snapshot gain has touched the activation threshold
        bool armed = false;
        for (std::size_t j = 0; j <= k; ++j)
            if (ref_return(trade.side, entry, trade.path[j].price) >=
                cfg.trail_activation - kTriggerEps)
                armed = true;

        const double r = ref_return(trade.side, entry, p);

        // 1. stop-loss
        if (r <= -cfg.stop_loss + kTriggerEps) {
            const double level = is_long ? entry * (1.0 - cfg.stop_loss)
                                         : entry * (1.0 + cfg.stop_loss);
            const double price = is_long ? std::min(level, p) : std::max(level, p);
            fills.push_back({t, price, open, FillReason::StopLoss});
            open = 0.0;
            break;
        }
        // 2. ATR stop
        if (levels.has_atr && r <= ref_return(trade.side, entry, levels.atr_stop) + kTriggerEps) {
            const double price =
                is_long ? std::min(levels.atr_stop, p) : std::max(levels.atr_stop, p);
            fills.push_back({t, price, open, FillReason::AtrStop});
            open = 0.0;
            break;
        }
        // 3. trailing stop
        if (armed) {
            const double retrace = is_long ? (peak - p) / peak : (p - peak) / peak;
            if (retrace >= cfg.trail_distance - kTriggerEps) {
                const double level = is_long ? peak * (1.0 - cfg.trail_distance)
                                             : peak * (1.0 + cfg.trail_distance);
                const double price = is_long ? std::min(level, p) : std::max(level, p);
                fills.push_back({t, price, open, FillReason::TrailingStop});
                open = 0.0;
                break;
            }
        }
        // 4. partial take-profit (limit fill at the trigger level, once)
        if (!ptp_done && r >= cfg.ptp_threshold - kTriggerEps) {
            ptp_done = true;
            const double level = is_long ? entry * (1.0 + cfg.ptp_threshold)
                                         : entry * (1.0 - cfg.ptp_threshold);
            const double fraction = std::min(cfg.ptp_fraction, open);
            fills.push_back({t, level, fraction, FillReason::PartialTakeProfit});
            open -= fraction;
            if (open <= 0.0) break;
        }
        // 5. ATR take-profit (limit fill, closes everything left)
        if (levels.has_atr &&
            r >= ref_return(trade.side, entry, levels.atr_take_profit) - kTriggerEps) {
            fills.push_back({t, levels.atr_take_profit, open, FillReason::AtrTakeProfit});
            open = 0.0;
            break;
        }
        // 6. stale close
        if (t >= deadline) {
            fills.push_back({t, p, open, FillReason::StaleClose});
            open = 0.0;
            break;
        }
    }

    if (open > 0.0) {
        fills.push_back({trade.path.back().t, trade.path.back().price, open,
                         FillReason::PathEnd});
        processed = trade.path.size();
    }

    TradeOutcome outcome;
    outcome.trade_id = trade.trade_id;
    outcome.fills = fills;
    for (const auto& f : fills)
        outcome.realized_return += f.fraction * ref_return(trade.side, entry, f.price);
    double peak_ret = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < processed; ++j)
        peak_ret = std::max(peak_ret, ref_return(trade.side, entry, trade.path[j].price));
    for (const auto& f : fills)
        peak_ret = std::max(peak_ret, ref_return(trade.side, entry, f.price));
    outcome.peak_unrealized_return = peak_ret;
    outcome.capture_gap = std::max(0.0, peak_ret - outcome.realized_return);
    outcome.holding_hours =
        static_cast<double>(fills.back().t - trade.entry_time) / 3'600'000.0;
    outcome.exit_reason = fills.back().reason;
    return outcome;
}

inline bool outcomes_identical(const TradeOutcome& a, const TradeOutcome& b) {
    if (a.trade_id != b.trade_id || a.fills.size() != b.fills.size()) return false;
    for (std::size_t i = 0; i < a.fills.size(); ++i) {
        if (a.fills[i].t != b.fills[i].t || a.fills[i].price != b.fills[i].price ||
            a.fills[i].fraction != b.fills[i].fraction ||
            a.fills[i].reason != b.fills[i].reason)
            return false;
    }
    return a.realized_return == b.realized_return &&
           a.peak_unrealized_return == b.peak_unrealized_return &&
           a.capture_gap == b.capture_gap && a.holding_hours == b.holding_hours &&
           a.exit_reason == b.exit_reason;
}

}  // namespace refsim
