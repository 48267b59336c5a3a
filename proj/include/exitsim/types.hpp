#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "exitsim/errors.hpp"

namespace exitsim {

// Timestamps are UTC unix epoch milliseconds throughout.
using TimeMs = std::int64_t;

inline constexpr TimeMs kMsPerHour = 3'600'000;
inline constexpr TimeMs kMsPerDay = 86'400'000;

// Tolerance for trigger comparisons, applied in return-fraction space
// (price deltas divided by entry price). Both the engine and the test
// oracles use this constant so boundary behavior is identical.
inline constexpr double kTriggerEps = 1e-9;

inline double hours_between(TimeMs from, TimeMs to) {
    return static_cast<double>(to - from) / static_cast<double>(kMsPerHour);
}

// UTC calendar day index of a timestamp (floor division, works before 1970 too).
inline std::int64_t utc_day_index(TimeMs t) {
    std::int64_t d = t / kMsPerDay;
    if (t % kMsPerDay < 0) --d;
    return d;
}

enum class Side { Long, Short };

inline const char* to_string(Side s) { return s == Side::Long ? "long" : "short"; }

struct PricePoint {
    TimeMs t{0};
    double price{0.0};
};

struct TradeRecord {
    std::string trade_id;
    std::string symbol;
    Side side{Side::Long};
    TimeMs entry_time{0};
    double entry_price{0.0};
    std::vector<PricePoint> path;
    std::vector<PricePoint> lookback;  // pre-entry history, may be empty

    bool has_lookback() const { return !lookback.empty(); }
};

// Throws InvariantViolation if the record breaks any TradeRecord invariant.
inline void validate_trade(const TradeRecord& trade) {
    if (trade.trade_id.empty())
        throw InvariantViolation(trade.trade_id, "empty trade_id");
    if (!(trade.entry_price > 0.0) || !std::isfinite(trade.entry_price))
        throw InvariantViolation(trade.trade_id, "entry_price must be positive and finite");
    if (trade.path.empty())
        throw InvariantViolation(trade.trade_id, "path is empty");
    TimeMs prev = std::numeric_limits<TimeMs>::min();
    for (const auto& pt : trade.path) {
        if (!(pt.price > 0.0) || !std::isfinite(pt.price))
            throw InvariantViolation(trade.trade_id, "path price must be positive and finite");
        if (pt.t < trade.entry_time)
            throw InvariantViolation(trade.trade_id, "path timestamp precedes entry_time");
        if (pt.t <= prev)
            throw InvariantViolation(trade.trade_id, "path timestamps not strictly increasing");
        prev = pt.t;
    }
    prev = std::numeric_limits<TimeMs>::min();
    for (const auto& pt : trade.lookback) {
        if (!(pt.price > 0.0) || !std::isfinite(pt.price))
            throw InvariantViolation(trade.trade_id, "lookback price must be positive and finite");
        if (pt.t >= trade.entry_time)
            throw InvariantViolation(trade.trade_id, "lookback timestamp not before entry_time");
        if (pt.t <= prev)
            throw InvariantViolation(trade.trade_id, "lookback timestamps not strictly increasing");
        prev = pt.t;
    }
}

struct Dataset {
    std::vector<TradeRecord> trades;  // sorted by (entry_time, trade_id)
    std::string source_digest;        // fnv1a-64 hex over the raw input bytes

    std::size_t size() const { return trades.size(); }
    bool empty() const { return trades.empty(); }
};

// The six first-pass exit parameters. All thresholds are fractions of
// entry price; stale_hours is a holding-time limit in hours.
struct ExitConfig {
    double stop_loss{0.25};
    double trail_activation{0.03};
    double trail_distance{0.02};
    double ptp_threshold{0.05};
    double ptp_fraction{0.50};
    double stale_hours{24.0};
};

inline void validate_config(const ExitConfig& c) {
    auto frac = [](double v) { return v > 0.0 && v <= 1.0 && std::isfinite(v); };
    if (!frac(c.stop_loss) || c.stop_loss >= 1.0)
        throw ConfigError("stop_loss must be in (0,1)");
    if (!frac(c.trail_activation)) throw ConfigError("trail_activation must be in (0,1]");
    if (!frac(c.trail_distance) || c.trail_distance >= 1.0)
        throw ConfigError("trail_distance must be in (0,1)");
    if (!frac(c.ptp_threshold)) throw ConfigError("ptp_threshold must be in (0,1]");
    if (!frac(c.ptp_fraction)) throw ConfigError("ptp_fraction must be in (0,1]");
    if (!(c.stale_hours > 0.0) || !std::isfinite(c.stale_hours))
        throw ConfigError("stale_hours must be positive");
}

// Second-pass refinement knobs. cb_reduction_factor is nullopt when the
// circuit breaker is disabled (then cb_loss_threshold is irrelevant).
struct OverlayConfig {
    double atr_stop_mult{1.0};
    double atr_tp_mult{2.0};
    int cb_loss_threshold{2};
    std::optional<double> cb_reduction_factor{0.25};
    int atr_period{14};

    bool breaker_enabled() const { return cb_reduction_factor.has_value(); }
};

inline void validate_config(const OverlayConfig& c) {
    if (!(c.atr_stop_mult > 0.0)) throw ConfigError("atr_stop_mult must be positive");
    if (!(c.atr_tp_mult > 0.0)) throw ConfigError("atr_tp_mult must be positive");
    // threshold is irrelevant when the breaker is disabled (canonical form
    // pins it to 0 there)
    if (c.cb_reduction_factor) {
        if (c.cb_loss_threshold < 1) throw ConfigError("cb_loss_threshold must be >= 1");
        if (!(*c.cb_reduction_factor > 0.0 && *c.cb_reduction_factor < 1.0))
            throw ConfigError("cb_reduction_factor must be in (0,1)");
    }
    if (c.atr_period < 1) throw ConfigError("atr_period must be >= 1");
}

enum class FillReason {
    StopLoss,
    TrailingStop,
    PartialTakeProfit,
    StaleClose,
    AtrStop,
    AtrTakeProfit,
    PathEnd,
};

inline const char* to_string(FillReason r) {
    switch (r) {
        case FillReason::StopLoss: return "StopLoss";
        case FillReason::TrailingStop: return "TrailingStop";
        case FillReason::PartialTakeProfit: return "PartialTakeProfit";
        case FillReason::StaleClose: return "StaleClose";
        case FillReason::AtrStop: return "AtrStop";
        case FillReason::AtrTakeProfit: return "AtrTakeProfit";
        case FillReason::PathEnd: return "PathEnd";
    }
    return "?";
}

struct Fill {
    TimeMs t{0};
    double price{0.0};
    double fraction{0.0};  // of the original position size
    FillReason reason{FillReason::PathEnd};
};

struct TradeOutcome {
    std::string trade_id;
    std::vector<Fill> fills;
    double realized_return{0.0};         // position-weighted across fills
    double peak_unrealized_return{0.0};  // max over processed snapshots and fill prices
    double capture_gap{0.0};             // peak_unrealized_return - realized_return
    double holding_hours{0.0};
    FillReason exit_reason{FillReason::PathEnd};

    TimeMs exit_time() const { return fills.empty() ? 0 : fills.back().t; }
};

struct AtrEstimate {
    enum class Source { Lookback, PathWarmup };
    double value{0.0};   // price units
    int n_periods{0};    // true ranges folded into the estimate
    Source source{Source::Lookback};
};

}  // namespace exitsim
