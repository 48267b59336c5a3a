#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "exitsim/errors.hpp"
#include "exitsim/exit_engine.hpp"
#include "exitsim/metrics.hpp"
#include "exitsim/overlay.hpp"
#include "exitsim/types.hpp"

namespace exitsim {

struct GridSpec {
    std::vector<double> stop_loss_values;
    std::vector<double> trail_activation_values;
    std::vector<double> trail_distance_values;
    std::vector<double> ptp_threshold_values;
    std::vector<double> ptp_fraction_values;
    std::vector<double> stale_hours_values;
};

// First-pass search ranges: 7 * 5 * 4 * 4 * 4 * 4 = 8,960 configurations.
inline GridSpec default_grid() {
    return GridSpec{
        {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.50},
        {0.03, 0.05, 0.08, 0.10, 0.15},
        {0.02, 0.03, 0.05, 0.08},
        {0.05, 0.10, 0.15, 0.20},
        {0.25, 0.33, 0.50, 0.75},
        {12.0, 24.0, 48.0, 72.0},
    };
}

struct OverlayAxes {
    std::vector<double> atr_stop_mults;
    std::vector<double> atr_tp_mults;
    std::vector<int> cb_thresholds;
    std::vector<std::optional<double>> cb_factors;  // nullopt = breaker disabled
    int atr_period{14};
};

// Second-pass ranges: 5 * 4 * 4 * 4 = 320 overlays per base configuration.
inline OverlayAxes default_overlay_axes() {
    return OverlayAxes{
        {1.0, 1.5, 2.0, 2.5, 3.0},
        {2.0, 3.0, 4.0, 6.0},
        {2, 3, 4, 5},
        {std::optional<double>{0.25}, std::optional<double>{0.50}, std::optional<double>{0.75},
         std::nullopt},
        14,
    };
}

inline void validate_grid(const GridSpec& spec) {
    auto check = [](const std::vector<double>& axis, const char* name) {
        if (axis.empty()) throw EmptyAxis(name);
        for (std::size_t i = 1; i < axis.size(); ++i)
            if (!(axis[i] > axis[i - 1]))
                throw ConfigError(std::string("grid axis '") + name +
                                  "' must be strictly increasing");
    };
    check(spec.stop_loss_values, "stop_loss");
    check(spec.trail_activation_values, "trail_activation");
    check(spec.trail_distance_values, "trail_distance");
    check(spec.ptp_threshold_values, "ptp_threshold");
    check(spec.ptp_fraction_values, "ptp_fraction");
    check(spec.stale_hours_values, "stale_hours");
}

// Full Cartesian product in lexicographic order: stop_loss outermost,
// stale_hours innermost.
inline std::vector<ExitConfig> enumerate_grid(const GridSpec& spec) {
    validate_grid(spec);
    std::vector<ExitConfig> configs;
    configs.reserve(spec.stop_loss_values.size() * spec.trail_activation_values.size() *
                    spec.trail_distance_values.size() * spec.ptp_threshold_values.size() *
                    spec.ptp_fraction_values.size() * spec.stale_hours_values.size());
    for (double sl : spec.stop_loss_values)
        for (double ta : spec.trail_activation_values)
            for (double td : spec.trail_distance_values)
                for (double ptp : spec.ptp_threshold_values)
                    for (double pf : spec.ptp_fraction_values)
                        for (double stale : spec.stale_hours_values) {
                            ExitConfig c{sl, ta, td, ptp, pf, stale};
                            validate_config(c);
                            configs.push_back(c);
                        }
    return configs;
}

inline auto config_key(const ExitConfig& c) {
    return std::make_tuple(c.stop_loss, c.trail_activation, c.trail_distance, c.ptp_threshold,
                           c.ptp_fraction, c.stale_hours);
}

// Total order over overlays for deterministic tie-breaks; a disabled breaker
// sorts after enabled factors.
inline auto overlay_key(const OverlayConfig& o) {
    const bool disabled = !o.cb_reduction_factor;
    return std::make_tuple(o.atr_stop_mult, o.atr_tp_mult, disabled ? 1 : 0,
                           o.cb_reduction_factor.value_or(0.0), o.cb_loss_threshold);
}

struct RankedResult {
    ExitConfig config;
    std::optional<OverlayConfig> overlay;
    MetricsReport metrics;
    int rank{0};
};

// Ordering key for rankings: Sharpe descending (the +inf sentinel first),
// ties by profit factor descending, then config lexicographic.
inline bool result_before(const RankedResult& a, const RankedResult& b) {
    if (a.metrics.sharpe != b.metrics.sharpe) return a.metrics.sharpe > b.metrics.sharpe;
    if (a.metrics.profit_factor != b.metrics.profit_factor)
        return a.metrics.profit_factor > b.metrics.profit_factor;
    if (config_key(a.config) != config_key(b.config))
        return config_key(a.config) < config_key(b.config);
    const bool ao = a.overlay.has_value(), bo = b.overlay.has_value();
    if (ao != bo) return !ao;
    if (ao && bo) return overlay_key(*a.overlay) < overlay_key(*b.overlay);
    return false;
}

namespace detail {

// Evaluates `count` independent jobs on `jobs` worker threads. Results land
// at their own index, so output order never depends on scheduling. The first
// exception a worker hits is rethrown on the calling thread after all
// workers have drained.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::vector<RankedResult> rank_results(std::vector<RankedResult> defined) {
    std::sort(defined.begin(), defined.end(), result_before);
    for (std::size_t i = 0; i < defined.size(); ++i)
        defined[i].rank = static_cast<int>(i) + 1;
    return defined;
}

}  // namespace detail

struct GridRunResult {
    std::vector<RankedResult> ranked;
    // Configurations whose Sharpe came out undefined; excluded from the
    // ranking so aggregates are not poisoned.
    std::vector<RankedResult> undefined;
};

inline MetricsReport evaluate_config(const Dataset& dataset, const ExitConfig& config,
                                     double notional, const MetricsConfig& mcfg = {}) {
    const std::vector<TradeOutcome> outcomes = replay_portfolio(dataset, config);
    return compute_metrics(outcomes, std::nullopt, notional, notional, mcfg);
}

// Evaluates every configuration of the grid over the dataset and ranks the
// results. Evaluation order (and the worker count) cannot influence the
// outcome: results are collected per index and sorted by the ranking key.
inline GridRunResult run_grid(const Dataset& dataset, const GridSpec& spec, double notional,
                              int jobs = 1, const MetricsConfig& mcfg = {}) {
    if (dataset.empty()) throw EmptyDataset();
    const std::vector<ExitConfig> configs = enumerate_grid(spec);
    std::vector<RankedResult> all(configs.size());
    detail::parallel_for(configs.size(), jobs, [&](std::size_t i) {
        all[i] = RankedResult{configs[i], std::nullopt,
                              evaluate_config(dataset, configs[i], notional, mcfg), 0};
    });

    GridRunResult result;
    for (auto& r : all) {
        if (sharpe_defined(r.metrics.sharpe)) result.ranked.push_back(std::move(r));
        else result.undefined.push_back(std::move(r));
    }
    result.ranked = detail::rank_results(std::move(result.ranked));
    return result;
}

// One nominal pass-2 combination and the canonical key it evaluates under.
// With the breaker disabled the loss threshold is irrelevant, so all
// threshold variants collapse onto a single canonical configuration
// (threshold pinned to 0).
struct Pass2MapEntry {
    std::size_t base_index{0};
    OverlayConfig nominal;
    OverlayConfig canonical;
};

struct Pass2Result {
    std::vector<RankedResult> ranked;
    std::vector<RankedResult> undefined;
    std::size_t nominal_count{0};
    std::size_t evaluated_count{0};
    std::vector<Pass2MapEntry> dedup_map;
    std::vector<std::string> zero_atr_trades;
};

inline OverlayConfig canonical_overlay(const OverlayConfig& o) {
    OverlayConfig c = o;
    if (!c.breaker_enabled()) c.cb_loss_threshold = 0;
    return c;
}

// Refines the top first-pass configurations with the ATR/circuit-breaker
// overlay grid. Nominal enumeration order: base outermost, then
// atr_stop_mult, atr_tp_mult, cb_loss_threshold, cb_reduction_factor
// innermost. Duplicate disabled-breaker combinations are evaluated once.
inline Pass2Result refine_pass2(const Dataset& dataset, const std::vector<ExitConfig>& top_k,
                                const OverlayAxes& axes, double notional, int jobs = 1,
                                const MetricsConfig& mcfg = {}) {
    if (dataset.empty()) throw EmptyDataset();
    if (top_k.empty()) throw ConfigError("top_k must not be empty");
    if (axes.atr_stop_mults.empty()) throw EmptyAxis("atr_stop_mult");
    if (axes.atr_tp_mults.empty()) throw EmptyAxis("atr_tp_mult");
    if (axes.cb_thresholds.empty()) throw EmptyAxis("cb_loss_threshold");
    if (axes.cb_factors.empty()) throw EmptyAxis("cb_reduction_factor");

    Pass2Result result;
    struct Job {
        std::size_t base_index;
        OverlayConfig overlay;
    };
    std::vector<Job> jobs_list;
    std::map<std::pair<std::size_t, decltype(overlay_key(OverlayConfig{}))>, std::size_t> seen;

    for (std::size_t b = 0; b < top_k.size(); ++b)
        for (double sl_mult : axes.atr_stop_mults)
            for (double tp_mult : axes.atr_tp_mults)
                for (int threshold : axes.cb_thresholds)
                    for (const auto& factor : axes.cb_factors) {
                        OverlayConfig nominal{sl_mult, tp_mult, threshold, factor,
                                              axes.atr_period};
                        const OverlayConfig canon = canonical_overlay(nominal);
                        result.dedup_map.push_back({b, nominal, canon});
                        ++result.nominal_count;
                        const auto key = std::make_pair(b, overlay_key(canon));
                        if (seen.find(key) == seen.end()) {
                            seen.emplace(key, jobs_list.size());
                            jobs_list.push_back({b, canon});
                        }
                    }
    result.evaluated_count = jobs_list.size();

    std::vector<RankedResult> all(jobs_list.size());
    std::vector<std::vector<std::string>> zero_atr(jobs_list.size());
    detail::parallel_for(jobs_list.size(), jobs, [&](std::size_t i) {
        const Job& job = jobs_list[i];
        OverlayRun run =
            simulate_with_overlay(dataset, top_k[job.base_index], job.overlay, notional);
        MetricsReport metrics =
            compute_metrics(run.outcomes, run.sized_pnl, notional, notional, mcfg);
        all[i] = RankedResult{top_k[job.base_index], job.overlay, metrics, 0};
        zero_atr[i] = std::move(run.zero_atr_trades);
    });
    if (!zero_atr.empty()) result.zero_atr_trades = zero_atr.front();

    for (auto& r : all) {
        if (sharpe_defined(r.metrics.sharpe)) result.ranked.push_back(std::move(r));
        else result.undefined.push_back(std::move(r));
    }
    result.ranked = detail::rank_results(std::move(result.ranked));
    return result;
}

struct HeatmapCell {
    double x{0.0};
    double y{0.0};
    double mean_sharpe{0.0};
    int n_configs{0};
};

inline double config_field(const ExitConfig& c, const std::string& axis) {
    if (axis == "stop_loss") return c.stop_loss;
    if (axis == "trail_activation") return c.trail_activation;
    if (axis == "trail_distance") return c.trail_distance;
    if (axis == "ptp_threshold") return c.ptp_threshold;
    if (axis == "ptp_fraction") return c.ptp_fraction;
    if (axis == "stale_hours") return c.stale_hours;
    throw UnknownAxis(axis);
}

// Mean Sharpe per (x_axis, y_axis) value pair, cells ordered by ascending
// (x, y). Undefined Sharpe never reaches this point (run_grid already
// excludes it), so every member of a cell contributes.
inline std::vector<HeatmapCell> heatmap(const std::vector<RankedResult>& results,
                                        const std::string& x_axis, const std::string& y_axis) {
    if (results.empty()) throw MissingResults("no results to aggregate");
    if (x_axis == y_axis) throw UnknownAxis("x and y axes must differ");
    std::map<std::pair<double, double>, std::pair<double, int>> cells;
    for (const auto& r : results) {
        const auto key = std::make_pair(config_field(r.config, x_axis),
                                        config_field(r.config, y_axis));
        auto& cell = cells[key];
        cell.first += r.metrics.sharpe;
        cell.second += 1;
    }
    std::vector<HeatmapCell> out;
    out.reserve(cells.size());
    for (const auto& [key, agg] : cells)
        out.push_back({key.first, key.second, agg.first / agg.second, agg.second});
    return out;
}

struct ParetoPoint {
    std::size_t result_index{0};  // into the input sequence
    double sharpe{0.0};
    double max_drawdown{0.0};
    bool dominated{false};
};

// Marks domination under (maximize Sharpe, minimize drawdown). A point is
// dominated when some other point is at least as good on both axes and
// strictly better on one; exact duplicates survive as non-dominated. Output
// is sorted by drawdown ascending (Sharpe descending within ties), so the
// frontier members appear in plotting order.
inline std::vector<ParetoPoint> pareto_frontier(const std::vector<RankedResult>& results) {
    std::vector<ParetoPoint> points;
    points.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& m = results[i].metrics;
        if (!std::isfinite(m.sharpe) || !std::isfinite(m.max_drawdown))
            throw ConfigError("pareto_frontier requires finite Sharpe and drawdown");
        points.push_back({i, m.sharpe, m.max_drawdown, false});
    }
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.max_drawdown != b.max_drawdown) return a.max_drawdown < b.max_drawdown;
        if (a.sharpe != b.sharpe) return a.sharpe > b.sharpe;
        return a.result_index < b.result_index;
    });

    double best_sharpe = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < points.size()) {
        std::size_t j = i;
        while (j < points.size() && points[j].max_drawdown == points[i].max_drawdown) ++j;
        const double group_max = points[i].sharpe;  // group sorted sharpe-descending
        for (std::size_t k = i; k < j; ++k)
            points[k].dominated = points[k].sharpe < group_max || best_sharpe >= points[k].sharpe;
        best_sharpe = std::max(best_sharpe, group_max);
        i = j;
    }
    return points;
}

}  // namespace exitsim
