// exitsim command-line front end: validate / simulate / grid / refine / report.
// Exit codes: 0 success, 1 data or validation failure, 2 usage or IO error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exitsim/exitsim.hpp"

namespace fs = std::filesystem;
using namespace exitsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsageError = 2;

int default_jobs() {
    if (const char* env = std::getenv("EXITSIM_JOBS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

std::string now_utc() { return iso8601_utc(std::chrono::system_clock::now()); }

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path);
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::istringstream stream(csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": bad value '" + item + "'");
        }
    }
    return out;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string data;
    std::string preset;
    std::string config_file;
    double notional = 1000.0;
    std::string out = "out";
};

int run_simulate(const SimulateArgs& args) {
    require_file(args.data);
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.started = now_utc();

    ExitConfig config;
    std::optional<OverlayConfig> overlay;
    if (!args.config_file.empty()) {
        require_file(args.config_file);
        ParsedConfigFile parsed = parse_config_file(read_text_file(args.config_file));
        config = parsed.exit;
        overlay = parsed.overlay;
    } else if (args.preset == "baseline") {
        config = baseline_config();
    } else if (args.preset == "recommended") {
        config = recommended_config();
    } else {
        throw ConfigError("choose --preset baseline|recommended or --config FILE");
    }

    const Dataset dataset = load_dataset(args.data);
    manifest.dataset_digest = dataset.source_digest;
    manifest.parameters["data"] = args.data;
    manifest.parameters["notional"] = args.notional;
    manifest.parameters["config"] = config_to_json(config);
    if (overlay) manifest.parameters["overlay"] = overlay_to_json(*overlay);

    fs::create_directories(args.out);
    MetricsReport metrics;
    if (overlay) {
        OverlayRun run = simulate_with_overlay(dataset, config, *overlay, args.notional);
        metrics = compute_metrics(run.outcomes, run.sized_pnl, args.notional, args.notional);
        write_text_file(args.out + "/outcomes.csv", outcomes_to_csv(run.outcomes, run.info));
        write_text_file(args.out + "/outcomes.jsonl",
                        outcomes_to_jsonl(run.outcomes, &run.info));
        write_text_file(args.out + "/diagnostics.json",
                        diagnostics_to_json({}, run.zero_atr_trades).dump(2) + "\n");
    } else {
        const std::vector<TradeOutcome> outcomes = replay_portfolio(dataset, config);
        metrics = compute_metrics(outcomes, std::nullopt, args.notional, args.notional);
        write_text_file(args.out + "/outcomes.csv", outcomes_to_csv(outcomes));
        write_text_file(args.out + "/outcomes.jsonl", outcomes_to_jsonl(outcomes));
    }
    write_text_file(args.out + "/metrics.json", metrics_to_json(metrics).dump(2) + "\n");
    manifest.finished = now_utc();
    write_manifest(args.out, manifest);
    std::cout << "simulated " << dataset.size() << " trades; sharpe " << fixed6(metrics.sharpe)
              << ", profit_factor " << fixed6(metrics.profit_factor) << ", max_drawdown "
              << fixed6(metrics.max_drawdown) << "\n";
    std::cout << "results written to " << args.out << "\n";
    return kExitOk;
}

// ---- grid -------------------------------------------------------------------

struct SplitArgs {
    std::string split = "chrono";
    std::optional<std::uint64_t> seed;
    double train_fraction = 0.7;
    bool full_sample = false;
};

// Resolves the evaluation partitions shared by grid and refine.
struct Partitions {
    Dataset full;
    Dataset train;
    Dataset test;
    bool has_test = false;
};

Partitions make_partitions(const Dataset& dataset, const SplitArgs& args) {
    Partitions parts;
    parts.full = dataset;
    if (args.full_sample) {
        parts.train = dataset;
        return parts;
    }
    SplitSpec spec;
    spec.train_fraction = args.train_fraction;
    if (args.split == "chrono") {
        spec.mode = SplitMode::Chronological;
    } else if (args.split == "random") {
        spec.mode = SplitMode::Randomized;
        if (!args.seed) throw ConfigError("--split random requires --seed");
        spec.seed = *args.seed;
    } else {
        throw ConfigError("--split must be 'chrono' or 'random'");
    }
    SplitResult split_result = split(dataset, spec);
    parts.train = std::move(split_result.train);
    parts.test = std::move(split_result.test);
    parts.has_test = !parts.test.empty();
    return parts;
}

void echo_split(nlohmann::ordered_json& params, const SplitArgs& args) {
    params["split"] = args.full_sample ? "full-sample" : args.split;
    params["train_fraction"] = args.train_fraction;
}

struct GridArgs {
    std::string data;
    std::string grid_file;
    SplitArgs split;
    int jobs = default_jobs();
    double notional = 1000.0;
    int top_k = 5;
    std::string heatmap_x = "stop_loss";
    std::string heatmap_y = "trail_activation";
    std::string out = "out";
};

GridSpec load_grid_spec(const std::string& grid_file) {
    if (grid_file.empty()) return default_grid();
    require_file(grid_file);
    // Same flat key-value format as config files, with one list per axis.
    GridSpec spec;
    std::istringstream stream(read_text_file(grid_file));
    std::string line;
    while (std::getline(stream, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "stop_loss") spec.stop_loss_values = parse_double_list(value, key.c_str());
        else if (key == "trail_activation")
            spec.trail_activation_values = parse_double_list(value, key.c_str());
        else if (key == "trail_distance")
            spec.trail_distance_values = parse_double_list(value, key.c_str());
        else if (key == "ptp_threshold")
            spec.ptp_threshold_values = parse_double_list(value, key.c_str());
        else if (key == "ptp_fraction")
            spec.ptp_fraction_values = parse_double_list(value, key.c_str());
        else if (key == "stale_hours")
            spec.stale_hours_values = parse_double_list(value, key.c_str());
        else
            throw ConfigError("unknown grid axis '" + key + "'");
    }
    validate_grid(spec);
    return spec;
}

nlohmann::ordered_json grid_axes_json(const GridSpec& spec) {
    nlohmann::ordered_json j;
    j["stop_loss"] = spec.stop_loss_values;
    j["trail_activation"] = spec.trail_activation_values;
    j["trail_distance"] = spec.trail_distance_values;
    j["ptp_threshold"] = spec.ptp_threshold_values;
    j["ptp_fraction"] = spec.ptp_fraction_values;
    j["stale_hours"] = spec.stale_hours_values;
    return j;
}

int run_grid_cmd(const GridArgs& args) {
    require_file(args.data);
    RunManifest manifest;
    manifest.command = "grid";
    manifest.started = now_utc();
    manifest.seed = args.split.seed;

    const Dataset dataset = load_dataset(args.data);
    manifest.dataset_digest = dataset.source_digest;
    const Partitions parts = make_partitions(dataset, args.split);
    const GridSpec spec = load_grid_spec(args.grid_file);

    manifest.parameters["data"] = args.data;
    echo_split(manifest.parameters, args.split);
    manifest.parameters["notional"] = args.notional;
    manifest.parameters["jobs"] = args.jobs;
    manifest.parameters["top_k"] = args.top_k;
    manifest.parameters["grid"] = grid_axes_json(spec);
    manifest.parameters["heatmap_axes"] = {args.heatmap_x, args.heatmap_y};
    manifest.parameters["n_trades"] = dataset.size();
    manifest.parameters["n_train"] = parts.train.size();
    manifest.parameters["n_test"] = parts.has_test ? parts.test.size() : 0;

    const GridRunResult result = run_grid(parts.train, spec, args.notional, args.jobs);

    std::vector<TopKRow> top_rows;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(args.top_k),
                                                result.ranked.size());
    for (std::size_t i = 0; i < k; ++i) {
        const RankedResult& r = result.ranked[i];
        TopKRow row;
        row.rank = r.rank;
        row.config = r.config;
        row.train = r.metrics;
        row.test = parts.has_test ? evaluate_config(parts.test, r.config, args.notional)
                                  : r.metrics;
        row.full = args.split.full_sample
                       ? r.metrics
                       : evaluate_config(parts.full, r.config, args.notional);
        top_rows.push_back(row);
    }

    // Pareto analysis needs finite values on both axes; the +inf Sharpe
    // sentinel (if any) is left out alongside the undefined configs.
    std::vector<RankedResult> finite;
    finite.reserve(result.ranked.size());
    for (const auto& r : result.ranked)
        if (std::isfinite(r.metrics.sharpe)) finite.push_back(r);

    fs::create_directories(args.out);
    write_text_file(args.out + "/grid_results.csv", grid_results_to_csv(result.ranked));
    write_text_file(args.out + "/top_k.csv", top_k_to_csv(top_rows));
    // a fully-undefined grid still writes the headers plus diagnostics
    write_text_file(args.out + "/heatmap.csv",
                    result.ranked.empty()
                        ? heatmap_to_csv({})
                        : heatmap_to_csv(heatmap(result.ranked, args.heatmap_x,
                                                 args.heatmap_y)));
    write_text_file(args.out + "/pareto.csv",
                    pareto_to_csv(pareto_frontier(finite), finite));
    write_text_file(args.out + "/diagnostics.json",
                    diagnostics_to_json(result.undefined, {}).dump(2) + "\n");
    manifest.finished = now_utc();
    write_manifest(args.out, manifest);

    std::cout << "evaluated " << result.ranked.size() + result.undefined.size()
              << " configurations on " << parts.train.size() << " train trades ("
              << result.undefined.size() << " excluded as undefined)\n";
    if (!result.ranked.empty()) {
        const auto& best = result.ranked.front();
        std::cout << "best: sharpe " << fixed6(best.metrics.sharpe) << " at "
                  << exit_config_csv_row(best.config) << "\n";
    }
    std::cout << "results written to " << args.out << "\n";
    return kExitOk;
}

// ---- refine -----------------------------------------------------------------

struct RefineArgs {
    std::string data;
    std::string pass1_results;
    int top_k = 5;
    SplitArgs split;
    std::string atr_stop_mults;
    std::string atr_tp_mults;
    std::string cb_thresholds;
    std::string cb_factors;
    int atr_period = 14;
    int jobs = default_jobs();
    double notional = 1000.0;
    bool unsized = false;
    std::string out = "out";
};

OverlayAxes build_axes(const RefineArgs& args) {
    OverlayAxes axes = default_overlay_axes();
    if (!args.atr_stop_mults.empty())
        axes.atr_stop_mults = parse_double_list(args.atr_stop_mults, "--atr-stop-mults");
    if (!args.atr_tp_mults.empty())
        axes.atr_tp_mults = parse_double_list(args.atr_tp_mults, "--atr-tp-mults");
    if (!args.cb_thresholds.empty()) {
        axes.cb_thresholds.clear();
        for (double v : parse_double_list(args.cb_thresholds, "--cb-thresholds"))
            axes.cb_thresholds.push_back(static_cast<int>(v));
    }
    if (!args.cb_factors.empty()) {
        axes.cb_factors.clear();
        std::istringstream stream(args.cb_factors);
        std::string item;
        while (std::getline(stream, item, ',')) {
            if (item == "disabled") axes.cb_factors.push_back(std::nullopt);
            else axes.cb_factors.push_back(std::stod(item));
        }
    }
    axes.atr_period = args.atr_period;
    return axes;
}

int run_refine(const RefineArgs& args) {
    require_file(args.data);
    RunManifest manifest;
    manifest.command = "refine";
    manifest.started = now_utc();
    manifest.seed = args.split.seed;

    const std::vector<ExitConfig> bases =
        read_pass1_configs(args.pass1_results, static_cast<std::size_t>(args.top_k));
    const Dataset dataset = load_dataset(args.data);
    manifest.dataset_digest = dataset.source_digest;
    const Partitions parts = make_partitions(dataset, args.split);
    const OverlayAxes axes = build_axes(args);

    manifest.parameters["data"] = args.data;
    echo_split(manifest.parameters, args.split);
    manifest.parameters["notional"] = args.notional;
    manifest.parameters["jobs"] = args.jobs;
    manifest.parameters["top_k"] = args.top_k;
    manifest.parameters["pass1_results"] = args.pass1_results;
    manifest.parameters["atr_period"] = axes.atr_period;
    manifest.parameters["atr_stop_mults"] = axes.atr_stop_mults;
    manifest.parameters["atr_tp_mults"] = axes.atr_tp_mults;
    manifest.parameters["cb_thresholds"] = axes.cb_thresholds;
    {
        nlohmann::ordered_json factors = nlohmann::ordered_json::array();
        for (const auto& f : axes.cb_factors)
            factors.push_back(f ? nlohmann::ordered_json(*f)
                               : nlohmann::ordered_json("disabled"));
        manifest.parameters["cb_factors"] = factors;
    }
    manifest.parameters["unsized"] = args.unsized;

    const Pass2Result result = refine_pass2(parts.train, bases, axes, args.notional, args.jobs);

    fs::create_directories(args.out);
    std::string results_csv = refine_results_to_csv(result.ranked);
    if (args.unsized) {
        // Re-simulate the ranked configurations without circuit-breaker
        // sizing so both Sharpe conventions are reported side by side.
        std::string with_unsized = "rank,";
        with_unsized += exit_config_csv_header();
        with_unsized +=
            ",atr_stop_mult,atr_tp_mult,cb_loss_threshold,cb_reduction_factor,";
        with_unsized += metrics_csv_header();
        with_unsized += ",sharpe_unsized\n";
        std::istringstream stream(results_csv);
        std::string line;
        std::getline(stream, line);  // drop header
        for (const auto& r : result.ranked) {
            std::getline(stream, line);
            OverlayRun run = simulate_with_overlay(parts.train, r.config, *r.overlay,
                                                   args.notional);
            const MetricsReport unsized = compute_metrics(run.outcomes, std::nullopt,
                                                          args.notional, args.notional);
            with_unsized += line + ',' + fixed6(unsized.sharpe) + '\n';
        }
        results_csv = with_unsized;
    }
    write_text_file(args.out + "/refine_results.csv", results_csv);
    write_text_file(args.out + "/dedup_map.csv", dedup_map_to_csv(result.dedup_map));
    write_text_file(args.out + "/diagnostics.json",
                    diagnostics_to_json(result.undefined, result.zero_atr_trades).dump(2) + "\n");
    manifest.parameters["nominal_configs"] = result.nominal_count;
    manifest.parameters["evaluated_configs"] = result.evaluated_count;
    manifest.finished = now_utc();
    write_manifest(args.out, manifest);

    std::cout << "refined " << bases.size() << " base configurations: "
              << result.nominal_count << " nominal, " << result.evaluated_count
              << " evaluated after dedup (" << result.undefined.size()
              << " excluded as undefined)\n";
    if (!result.ranked.empty()) {
        const auto& best = result.ranked.front();
        std::cout << "best: sharpe " << fixed6(best.metrics.sharpe) << " at "
                  << exit_config_csv_row(best.config) << " + "
                  << overlay_csv_fields(*best.overlay) << "\n";
    }
    std::cout << "results written to " << args.out << "\n";
    return kExitOk;
}

// ---- report -----------------------------------------------------------------

std::string describe_config(const ExitConfig& c) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "SL %.2f, TA %.2f, TD %.2f, PTP %.2f, PF %.2f, %.0f h",
                  c.stop_loss, c.trail_activation, c.trail_distance, c.ptp_threshold,
                  c.ptp_fraction, c.stale_hours);
    return buf;
}

std::string describe_overlay_fields(const std::string& atr_stop, const std::string& atr_tp,
                                    const std::string& cb_thresh, const std::string& cb_factor) {
    char buf[128];
    if (cb_factor == "disabled") {
        std::snprintf(buf, sizeof(buf), "+ ATR SL %.1fx, ATR TP %.1fx, CB disabled",
                      std::stod(atr_stop), std::stod(atr_tp));
    } else {
        std::snprintf(buf, sizeof(buf), "+ ATR SL %.1fx, ATR TP %.1fx, CB %.2f after %d losses",
                      std::stod(atr_stop), std::stod(atr_tp), std::stod(cb_factor),
                      std::stoi(cb_thresh));
    }
    return buf;
}

int run_report(const std::string& results_dir) {
    const std::string grid_path = results_dir + "/grid_results.csv";
    const std::string refine_path = results_dir + "/refine_results.csv";
    if (!fs::exists(grid_path)) throw MissingResults(grid_path);

    const CsvTable grid = parse_csv(read_text_file(grid_path));
    const std::size_t sharpe_col = grid.column("sharpe");
    const std::size_t pf_col = grid.column("profit_factor");
    const std::size_t dd_col = grid.column("max_dd");

    auto config_of_row = [&](const std::vector<std::string>& row) {
        return ExitConfig{std::stod(row[grid.column("stop_loss")]),
                          std::stod(row[grid.column("trail_activation")]),
                          std::stod(row[grid.column("trail_distance")]),
                          std::stod(row[grid.column("ptp_threshold")]),
                          std::stod(row[grid.column("ptp_fraction")]),
                          std::stod(row[grid.column("stale_hours")])};
    };

    const ExitConfig baseline = baseline_config();
    const std::vector<std::string>* baseline_row = nullptr;
    for (const auto& row : grid.rows) {
        const ExitConfig c = config_of_row(row);
        if (std::abs(c.stop_loss - baseline.stop_loss) < 1e-9 &&
            std::abs(c.trail_activation - baseline.trail_activation) < 1e-9 &&
            std::abs(c.trail_distance - baseline.trail_distance) < 1e-9 &&
            std::abs(c.ptp_threshold - baseline.ptp_threshold) < 1e-9 &&
            std::abs(c.ptp_fraction - baseline.ptp_fraction) < 1e-9 &&
            std::abs(c.stale_hours - baseline.stale_hours) < 1e-9) {
            baseline_row = &row;
            break;
        }
    }
    if (!baseline_row) throw MissingResults("baseline configuration not in grid results");
    if (grid.rows.empty()) throw MissingResults("grid results are empty");

    struct Row {
        std::string case_name;
        std::string configuration;
        std::string profit_factor;
        std::string max_dd;
        std::string sharpe;
        std::string improvement;
    };
    const double base_sharpe = std::stod((*baseline_row)[sharpe_col]);
    std::vector<Row> rows;
    rows.push_back({"Baseline", describe_config(config_of_row(*baseline_row)),
                    (*baseline_row)[pf_col], (*baseline_row)[dd_col],
                    (*baseline_row)[sharpe_col], "-"});

    const auto& best1 = grid.rows.front();  // rows are written in rank order
    rows.push_back({"Best pass 1", describe_config(config_of_row(best1)), best1[pf_col],
                    best1[dd_col], best1[sharpe_col],
                    format_improvement(base_sharpe, std::stod(best1[sharpe_col]))});

    if (fs::exists(refine_path)) {
        const CsvTable refine = parse_csv(read_text_file(refine_path));
        if (!refine.rows.empty()) {
            const auto& best2 = refine.rows.front();
            const ExitConfig base_cfg{std::stod(best2[refine.column("stop_loss")]),
                                      std::stod(best2[refine.column("trail_activation")]),
                                      std::stod(best2[refine.column("trail_distance")]),
                                      std::stod(best2[refine.column("ptp_threshold")]),
                                      std::stod(best2[refine.column("ptp_fraction")]),
                                      std::stod(best2[refine.column("stale_hours")])};
            const std::string cfg =
                "Base (" + describe_config(base_cfg) + ") " +
                describe_overlay_fields(best2[refine.column("atr_stop_mult")],
                                        best2[refine.column("atr_tp_mult")],
                                        best2[refine.column("cb_loss_threshold")],
                                        best2[refine.column("cb_reduction_factor")]);
            rows.push_back({"Best pass 2", cfg, best2[refine.column("profit_factor")],
                            best2[refine.column("max_dd")],
                            best2[refine.column("sharpe")],
                            format_improvement(base_sharpe,
                                               std::stod(best2[refine.column("sharpe")]))});
        }
    }

    std::size_t config_width = 13;
    for (const auto& r : rows) config_width = std::max(config_width, r.configuration.size());
    auto pad = [](const std::string& s, std::size_t w) {
        return s + std::string(w > s.size() ? w - s.size() : 1, ' ');
    };
    std::string out;
    out += pad("Case", 12) + pad("Configuration", config_width + 2) +
           pad("Profit factor", 15) + pad("Max DD", 13) + pad("Sharpe", 10) + "vs baseline\n";
    for (const auto& r : rows)
        out += pad(r.case_name, 12) + pad(r.configuration, config_width + 2) +
               pad(r.profit_factor, 15) + pad(r.max_dd, 13) + pad(r.sharpe, 10) +
               r.improvement + "\n";
    out += "\nImprovements are computed from the unrounded Sharpe values above as\n"
           "(new - old) / old and displayed truncated to one decimal place.\n"
           "Pass-2 drawdown comes from the sized equity curve.\n";
    std::cout << out;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterfactual exit-rule replay and calibration"};
    app.require_subcommand(1);

    SimulateArgs sim;
    GridArgs grid;
    RefineArgs refine;
    std::string validate_path;
    std::string report_dir;

    auto* validate_cmd = app.add_subcommand("validate", "check a JSONL trade file");
    validate_cmd->add_option("data", validate_path, "JSONL trade file")->required();

    auto* sim_cmd = app.add_subcommand("simulate", "replay trades under one configuration");
    sim_cmd->add_option("data", sim.data, "JSONL trade file")->required();
    sim_cmd->add_option("--preset", sim.preset, "baseline or recommended");
    sim_cmd->add_option("--config", sim.config_file, "flat key-value config file");
    sim_cmd->add_option("--notional", sim.notional, "currency per full-size trade");
    sim_cmd->add_option("--out", sim.out, "output directory");

    auto add_split_flags = [](CLI::App* cmd, SplitArgs& split_args) {
        cmd->add_option("--split", split_args.split, "chrono or random");
        cmd->add_option("--seed", split_args.seed, "shuffle seed (random split)");
        cmd->add_option("--train-fraction", split_args.train_fraction, "train share, (0,1)");
        cmd->add_flag("--full-sample", split_args.full_sample,
                      "rank on the whole dataset, no holdout");
    };

    auto* grid_cmd = app.add_subcommand("grid", "first-pass grid search");
    grid_cmd->add_option("data", grid.data, "JSONL trade file")->required();
    grid_cmd->add_option("--grid-file", grid.grid_file, "custom grid axes file");
    add_split_flags(grid_cmd, grid.split);
    grid_cmd->add_option("--jobs", grid.jobs, "worker threads (env EXITSIM_JOBS)");
    grid_cmd->add_option("--notional", grid.notional, "currency per full-size trade");
    grid_cmd->add_option("--top-k", grid.top_k, "rows in top_k.csv");
    grid_cmd->add_option("--heatmap-x", grid.heatmap_x, "heatmap x axis parameter");
    grid_cmd->add_option("--heatmap-y", grid.heatmap_y, "heatmap y axis parameter");
    grid_cmd->add_option("--out", grid.out, "output directory");

    auto* refine_cmd = app.add_subcommand("refine", "second-pass ATR/circuit-breaker overlay");
    refine_cmd->add_option("data", refine.data, "JSONL trade file")->required();
    refine_cmd->add_option("--pass1-results", refine.pass1_results,
                           "grid_results.csv or top_k.csv from pass 1")->required();
    refine_cmd->add_option("--top-k", refine.top_k, "base configurations to refine");
    add_split_flags(refine_cmd, refine.split);
    refine_cmd->add_option("--atr-stop-mults", refine.atr_stop_mults, "comma list");
    refine_cmd->add_option("--atr-tp-mults", refine.atr_tp_mults, "comma list");
    refine_cmd->add_option("--cb-thresholds", refine.cb_thresholds, "comma list");
    refine_cmd->add_option("--cb-factors", refine.cb_factors,
                           "comma list, 'disabled' allowed");
    refine_cmd->add_option("--atr-period", refine.atr_period, "ATR smoothing period");
    refine_cmd->add_option("--jobs", refine.jobs, "worker threads (env EXITSIM_JOBS)");
    refine_cmd->add_option("--notional", refine.notional, "currency per full-size trade");
    refine_cmd->add_flag("--unsized", refine.unsized,
                         "also report Sharpe without circuit-breaker sizing");
    refine_cmd->add_option("--out", refine.out, "output directory");

    auto* report_cmd = app.add_subcommand("report", "summarize grid/refine results");
    report_cmd->add_option("results_dir", report_dir, "directory with result CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsageError;
    }

    try {
        if (validate_cmd->parsed()) {
            require_file(validate_path);
            const ValidationReport report = validate_file(validate_path);
            for (const auto& issue : report.issues)
                std::cout << "line " << issue.line_no << ": " << issue.message << "\n";
            if (report.ok()) {
                std::cout << report.n_valid << " trades OK\n";
                return kExitOk;
            }
            std::cout << report.n_valid << " valid, " << report.issues.size()
                      << " invalid\n";
            return kExitDataError;
        }
        if (sim_cmd->parsed()) return run_simulate(sim);
        if (grid_cmd->parsed()) return run_grid_cmd(grid);
        if (refine_cmd->parsed()) return run_refine(refine);
        if (report_cmd->parsed()) return run_report(report_dir);
    } catch (const MalformedRecord& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const InvariantViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const DuplicateTradeId& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const EmptyDataset& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const InsufficientTrades& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsageError;
    }
    return kExitUsageError;
}
