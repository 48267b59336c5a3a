#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "exitsim/errors.hpp"
#include "exitsim/types.hpp"

namespace exitsim {

struct EquityPoint {
    TimeMs t{0};
    double equity{0.0};  // cumulative PnL, 0 = starting capital
};

struct EquityCurve {
    std::vector<EquityPoint> points;
    double notional{0.0};
};

// Knobs for the Sharpe convention. Defaults: resample to UTC calendar days,
// sample (n-1) standard deviation, sqrt(365) annualization (the sample
// trades every day of the week).
struct MetricsConfig {
    int resample_hours = 24;
    double annualization_factor = std::sqrt(365.0);
    bool sample_stdev = true;
};

// Sharpe is carried as a plain double: +inf is the zero-variance/positive-
// mean sentinel that ranks above all finite values; NaN marks an undefined
// statistic (zero variance with non-positive mean, or a curve too short to
// resample), which rankings must exclude.
inline bool sharpe_defined(double s) { return !std::isnan(s); }

struct MetricsReport {
    double sharpe{std::numeric_limits<double>::quiet_NaN()};
    double profit_factor{0.0};  // +inf when there are gains and no losses
    double max_drawdown{0.0};
    double total_pnl{0.0};
    int n_trades{0};
    double win_rate{0.0};
    double mean_capture_gap{0.0};
};

inline std::vector<double> per_trade_pnl(const std::vector<TradeOutcome>& outcomes,
                                         const std::optional<std::vector<double>>& sized_pnl,
                                         double notional) {
    if (outcomes.empty()) throw NoTrades();
    if (sized_pnl) {
        if (sized_pnl->size() != outcomes.size())
            throw MisalignedSizing(outcomes.size(), sized_pnl->size());
        return *sized_pnl;
    }
    std::vector<double> pnl;
    pnl.reserve(outcomes.size());
    for (const auto& o : outcomes) pnl.push_back(notional * o.realized_return);
    return pnl;
}

// Cumulative-PnL curve over trade close events, ordered by final-fill
// timestamp with trade_id breaking ties.
inline EquityCurve build_equity_curve(const std::vector<TradeOutcome>& outcomes,
                                      const std::optional<std::vector<double>>& sized_pnl,
                                      double notional) {
    const std::vector<double> pnl = per_trade_pnl(outcomes, sized_pnl, notional);

    struct Event {
        TimeMs t;
        const std::string* id;
        double pnl;
    };
    std::vector<Event> events;
    events.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        events.push_back({outcomes[i].exit_time(), &outcomes[i].trade_id, pnl[i]});
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        return *a.id < *b.id;
    });

    EquityCurve curve;
    curve.notional = notional;
    curve.points.reserve(events.size());
    double equity = 0.0;
    for (const auto& e : events) {
        equity += e.pnl;
        curve.points.push_back({e.t, equity});
    }
    return curve;
}

// Largest peak-to-trough decline over the curve, in currency units.
inline double max_drawdown(const EquityCurve& curve) {
    if (curve.points.empty()) throw NoTrades();
    double peak = -std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto& pt : curve.points) {
        peak = std::max(peak, pt.equity);
        worst = std::max(worst, peak - pt.equity);
    }
    return worst;
}

inline double profit_factor(const std::vector<TradeOutcome>& outcomes,
                            const std::optional<std::vector<double>>& sized_pnl = std::nullopt,
                            double notional = 1.0) {
    const std::vector<double> pnl = per_trade_pnl(outcomes, sized_pnl, notional);
    double gains = 0.0, losses = 0.0;
    for (double v : pnl) {
        if (v > 0.0) gains += v;
        else losses -= v;
    }
    if (gains == 0.0) return 0.0;
    if (losses == 0.0) return std::numeric_limits<double>::infinity();
    return gains / losses;
}

namespace detail {

// Resamples the curve to interval closes (last event per UTC-aligned bucket,
// forward-filled across empty buckets) and returns per-interval returns on
// capital_base. The interval before the first event carries the starting
// capital, so the first event bucket contributes a return as well.
inline std::vector<double> resampled_returns(const EquityCurve& curve, double capital_base,
                                             const MetricsConfig& cfg) {
    const TimeMs bucket_ms = static_cast<TimeMs>(cfg.resample_hours) * kMsPerHour;
    auto bucket_of = [&](TimeMs t) {
        std::int64_t b = t / bucket_ms;
        if (t % bucket_ms < 0) --b;
        return b;
    };

    const std::int64_t first = bucket_of(curve.points.front().t);
    const std::int64_t last = bucket_of(curve.points.back().t);
    if (last - first < 1) return {};

    std::vector<double> returns;
    returns.reserve(static_cast<std::size_t>(last - first + 1));
    double prev_equity = 0.0;  // starting capital baseline
    std::size_t idx = 0;
    for (std::int64_t b = first; b <= last; ++b) {
        double close = prev_equity;  // forward fill when the bucket is empty
        while (idx < curve.points.size() && bucket_of(curve.points[idx].t) == b) {
            close = curve.points[idx].equity;
            ++idx;
        }
        returns.push_back((close - prev_equity) / capital_base);
        prev_equity = close;
    }
    return returns;
}

}  // namespace detail

// Annualized mean/stdev of resampled returns with zero risk-free rate.
// Throws InsufficientSpan when the curve covers fewer than two buckets;
// zero stdev maps to +inf (mean > 0) or NaN (mean <= 0, undefined).
inline double sharpe_ratio(const EquityCurve& curve, double capital_base,
                           const MetricsConfig& cfg = {}) {
    if (curve.points.empty()) throw NoTrades();
    if (!(capital_base > 0.0)) throw ConfigError("capital_base must be positive");
    const std::vector<double> returns = detail::resampled_returns(curve, capital_base, cfg);
    if (returns.size() < 2) throw InsufficientSpan();

    // Zero variance is decided on the returns themselves, not on a computed
    // stdev, so summation rounding cannot hide the sentinel case.
    const bool zero_variance =
        std::all_of(returns.begin(), returns.end(),
                    [&](double r) { return r == returns.front(); });
    if (zero_variance) {
        if (returns.front() > 0.0) return std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }

    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    const double denom = cfg.sample_stdev ? static_cast<double>(returns.size() - 1)
                                          : static_cast<double>(returns.size());
    const double stdev = std::sqrt(ss / denom);
    return mean / stdev * cfg.annualization_factor;
}

// One-stop aggregation used by the search pipeline. A curve with
// insufficient span yields an undefined (NaN) Sharpe instead of throwing,
// so a grid sweep can collect the diagnostic and move on.
inline MetricsReport compute_metrics(const std::vector<TradeOutcome>& outcomes,
                                     const std::optional<std::vector<double>>& sized_pnl,
                                     double notional, double capital_base,
                                     const MetricsConfig& cfg = {}) {
    const std::vector<double> pnl = per_trade_pnl(outcomes, sized_pnl, notional);
    const EquityCurve curve = build_equity_curve(outcomes, sized_pnl, notional);

    MetricsReport report;
    report.n_trades = static_cast<int>(outcomes.size());
    report.max_drawdown = max_drawdown(curve);
    report.profit_factor = profit_factor(outcomes, sized_pnl, notional);
    try {
        report.sharpe = sharpe_ratio(curve, capital_base, cfg);
    } catch (const InsufficientSpan&) {
        report.sharpe = std::numeric_limits<double>::quiet_NaN();
    }

    int wins = 0;
    double gap_sum = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        report.total_pnl += pnl[i];
        if (pnl[i] > 0.0) ++wins;
        gap_sum += outcomes[i].capture_gap;
    }
    report.win_rate = static_cast<double>(wins) / static_cast<double>(outcomes.size());
    report.mean_capture_gap = gap_sum / static_cast<double>(outcomes.size());
    return report;
}

}  // namespace exitsim
