#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exitsim/errors.hpp"
#include "exitsim/metrics.hpp"
#include "exitsim/overlay.hpp"
#include "exitsim/search.hpp"
#include "exitsim/types.hpp"
#include "exitsim/version.hpp"

namespace exitsim {

// All floating-point output is fixed at 6 decimals so golden files stay
// byte-stable across runs and platforms.
inline std::string fixed6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---- outcome serialization ------------------------------------------------

inline const char* outcome_csv_header() {
    return "trade_id,exit_reason,realized_return,peak_unrealized_return,capture_gap,"
           "holding_hours,n_fills";
}

inline std::string outcome_csv_row(const TradeOutcome& o) {
    std::string row = csv_escape(o.trade_id);
    row += ',';
    row += to_string(o.exit_reason);
    row += ',';
    row += fixed6(o.realized_return);
    row += ',';
    row += fixed6(o.peak_unrealized_return);
    row += ',';
    row += fixed6(o.capture_gap);
    row += ',';
    row += fixed6(o.holding_hours);
    row += ',';
    row += std::to_string(o.fills.size());
    return row;
}

inline std::string outcomes_to_csv(const std::vector<TradeOutcome>& outcomes) {
    std::string out = outcome_csv_header();
    out += '\n';
    for (const auto& o : outcomes) {
        out += outcome_csv_row(o);
        out += '\n';
    }
    return out;
}

// Overlay variant adds sizing and the ATR levels actually applied.
inline std::string outcomes_to_csv(const std::vector<TradeOutcome>& outcomes,
                                   const std::vector<OverlayTradeInfo>& info) {
    std::string out = outcome_csv_header();
    out += ",sizing,atr_value,atr_stop_level,atr_tp_level\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        out += outcome_csv_row(outcomes[i]);
        out += ',';
        out += fixed6(info[i].sizing);
        out += ',';
        out += fixed6(info[i].atr_value);
        out += ',';
        out += info[i].atr_levels_active ? fixed6(info[i].atr_stop_level) : "";
        out += ',';
        out += info[i].atr_levels_active ? fixed6(info[i].atr_tp_level) : "";
        out += '\n';
    }
    return out;
}

inline std::string outcomes_to_jsonl(const std::vector<TradeOutcome>& outcomes,
                                     const std::vector<OverlayTradeInfo>* info = nullptr) {
    std::string out;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        nlohmann::ordered_json j;
        j["trade_id"] = o.trade_id;
        j["exit_reason"] = to_string(o.exit_reason);
        j["realized_return"] = fixed6(o.realized_return);
        j["peak_unrealized_return"] = fixed6(o.peak_unrealized_return);
        j["capture_gap"] = fixed6(o.capture_gap);
        j["holding_hours"] = fixed6(o.holding_hours);
        nlohmann::ordered_json fills = nlohmann::ordered_json::array();
        for (const auto& f : o.fills)
            fills.push_back({{"t", f.t},
                             {"price", fixed6(f.price)},
                             {"fraction", fixed6(f.fraction)},
                             {"reason", to_string(f.reason)}});
        j["fills"] = fills;
        if (info) {
            const auto& inf = (*info)[i];
            j["sizing"] = fixed6(inf.sizing);
            j["atr_value"] = fixed6(inf.atr_value);
            if (inf.atr_levels_active) {
                j["atr_stop_level"] = fixed6(inf.atr_stop_level);
                j["atr_tp_level"] = fixed6(inf.atr_tp_level);
            }
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---- metrics / config serialization ----------------------------------------

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["sharpe"] = fixed6(m.sharpe);
    j["profit_factor"] = fixed6(m.profit_factor);
    j["max_drawdown"] = fixed6(m.max_drawdown);
    j["total_pnl"] = fixed6(m.total_pnl);
    j["n_trades"] = m.n_trades;
    j["win_rate"] = fixed6(m.win_rate);
    j["mean_capture_gap"] = fixed6(m.mean_capture_gap);
    return j;
}

inline nlohmann::ordered_json config_to_json(const ExitConfig& c) {
    nlohmann::ordered_json j;
    j["stop_loss"] = fixed6(c.stop_loss);
    j["trail_activation"] = fixed6(c.trail_activation);
    j["trail_distance"] = fixed6(c.trail_distance);
    j["ptp_threshold"] = fixed6(c.ptp_threshold);
    j["ptp_fraction"] = fixed6(c.ptp_fraction);
    j["stale_hours"] = fixed6(c.stale_hours);
    return j;
}

inline nlohmann::ordered_json overlay_to_json(const OverlayConfig& o) {
    nlohmann::ordered_json j;
    j["atr_stop_mult"] = fixed6(o.atr_stop_mult);
    j["atr_tp_mult"] = fixed6(o.atr_tp_mult);
    j["cb_loss_threshold"] = o.cb_loss_threshold;
    j["cb_reduction_factor"] =
        o.cb_reduction_factor ? fixed6(*o.cb_reduction_factor) : std::string("disabled");
    j["atr_period"] = o.atr_period;
    return j;
}

// Flat key-value config files ("stop_loss = 0.10", '#' comments). Overlay
// keys are optional; when any appears the file describes a pass-2 run.
struct ParsedConfigFile {
    ExitConfig exit;
    std::optional<OverlayConfig> overlay;
};

inline ParsedConfigFile parse_config_file(const std::string& content) {
    ParsedConfigFile parsed;
    OverlayConfig overlay;
    bool overlay_seen = false;
    std::istringstream stream(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
        auto as_double = [&](const char* name) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("config field '" + std::string(name) + "': bad number '" +
                                  value + "'");
            }
        };
        if (key == "stop_loss") parsed.exit.stop_loss = as_double("stop_loss");
        else if (key == "trail_activation") parsed.exit.trail_activation = as_double(key.c_str());
        else if (key == "trail_distance") parsed.exit.trail_distance = as_double(key.c_str());
        else if (key == "ptp_threshold") parsed.exit.ptp_threshold = as_double(key.c_str());
        else if (key == "ptp_fraction") parsed.exit.ptp_fraction = as_double(key.c_str());
        else if (key == "stale_hours") parsed.exit.stale_hours = as_double(key.c_str());
        else if (key == "atr_stop_mult") { overlay.atr_stop_mult = as_double(key.c_str()); overlay_seen = true; }
        else if (key == "atr_tp_mult") { overlay.atr_tp_mult = as_double(key.c_str()); overlay_seen = true; }
        else if (key == "atr_period") { overlay.atr_period = static_cast<int>(as_double(key.c_str())); overlay_seen = true; }
        else if (key == "cb_loss_threshold") { overlay.cb_loss_threshold = static_cast<int>(as_double(key.c_str())); overlay_seen = true; }
        else if (key == "cb_reduction_factor") {
            overlay.cb_reduction_factor =
                value == "disabled" ? std::nullopt : std::optional<double>(as_double(key.c_str()));
            overlay_seen = true;
        } else {
            throw ConfigError("unknown config field '" + key + "'");
        }
    }
    validate_config(parsed.exit);
    if (overlay_seen) {
        validate_config(overlay);
        parsed.overlay = overlay;
    }
    return parsed;
}

// ---- search result serialization -------------------------------------------

inline const char* exit_config_csv_header() {
    return "stop_loss,trail_activation,trail_distance,ptp_threshold,ptp_fraction,stale_hours";
}

inline std::string exit_config_csv_row(const ExitConfig& c) {
    return fixed6(c.stop_loss) + ',' + fixed6(c.trail_activation) + ',' +
           fixed6(c.trail_distance) + ',' + fixed6(c.ptp_threshold) + ',' +
           fixed6(c.ptp_fraction) + ',' + fixed6(c.stale_hours);
}

inline const char* metrics_csv_header() {
    return "sharpe,profit_factor,max_dd,total_pnl,n_trades,win_rate,mean_capture_gap";
}

inline std::string metrics_csv_row(const MetricsReport& m) {
    return fixed6(m.sharpe) + ',' + fixed6(m.profit_factor) + ',' + fixed6(m.max_drawdown) +
           ',' + fixed6(m.total_pnl) + ',' + std::to_string(m.n_trades) + ',' +
           fixed6(m.win_rate) + ',' + fixed6(m.mean_capture_gap);
}

inline std::string grid_results_to_csv(const std::vector<RankedResult>& ranked) {
    std::string out = "rank,";
    out += exit_config_csv_header();
    out += ',';
    out += metrics_csv_header();
    out += '\n';
    for (const auto& r : ranked) {
        out += std::to_string(r.rank);
        out += ',';
        out += exit_config_csv_row(r.config);
        out += ',';
        out += metrics_csv_row(r.metrics);
        out += '\n';
    }
    return out;
}

inline std::string overlay_csv_fields(const OverlayConfig& o) {
    return fixed6(o.atr_stop_mult) + ',' + fixed6(o.atr_tp_mult) + ',' +
           std::to_string(o.cb_loss_threshold) + ',' +
           (o.cb_reduction_factor ? fixed6(*o.cb_reduction_factor) : std::string("disabled"));
}

inline std::string refine_results_to_csv(const std::vector<RankedResult>& ranked) {
    std::string out = "rank,";
    out += exit_config_csv_header();
    out += ",atr_stop_mult,atr_tp_mult,cb_loss_threshold,cb_reduction_factor,";
    out += metrics_csv_header();
    out += '\n';
    for (const auto& r : ranked) {
        out += std::to_string(r.rank);
        out += ',';
        out += exit_config_csv_row(r.config);
        out += ',';
        out += overlay_csv_fields(*r.overlay);
        out += ',';
        out += metrics_csv_row(r.metrics);
        out += '\n';
    }
    return out;
}

inline std::string dedup_map_to_csv(const std::vector<Pass2MapEntry>& map) {
    std::string out =
        "base_index,atr_stop_mult,atr_tp_mult,cb_loss_threshold,cb_reduction_factor,"
        "evaluated_cb_loss_threshold\n";
    for (const auto& e : map) {
        out += std::to_string(e.base_index);
        out += ',';
        out += overlay_csv_fields(e.nominal);
        out += ',';
        out += std::to_string(e.canonical.cb_loss_threshold);
        out += '\n';
    }
    return out;
}

inline std::string heatmap_to_csv(const std::vector<HeatmapCell>& cells) {
    std::string out = "x,y,mean_sharpe,n_configs\n";
    for (const auto& c : cells) {
        out += fixed6(c.x);
        out += ',';
        out += fixed6(c.y);
        out += ',';
        out += fixed6(c.mean_sharpe);
        out += ',';
        out += std::to_string(c.n_configs);
        out += '\n';
    }
    return out;
}

inline std::string pareto_to_csv(const std::vector<ParetoPoint>& points,
                                 const std::vector<RankedResult>& results) {
    std::string out = "sharpe,max_dd,dominated,";
    out += exit_config_csv_header();
    out += '\n';
    for (const auto& p : points) {
        out += fixed6(p.sharpe);
        out += ',';
        out += fixed6(p.max_drawdown);
        out += ',';
        out += p.dominated ? "1" : "0";
        out += ',';
        out += exit_config_csv_row(results[p.result_index].config);
        out += '\n';
    }
    return out;
}

// Percentage improvement of `now` over `base`: (now - base) / base, shown
// truncated (not rounded) to one decimal so 0.419 -> 0.525 reads +25.2%.
// Undefined when the base is not positive.
inline std::string format_improvement(double base, double now) {
    if (!(base > 0.0) || std::isnan(now)) return "n/a";
    const double pct = (now - base) / base * 100.0;
    // sweep away sub-1e-9 arithmetic noise before truncating, so an exact
    // -10% never displays as -9.9%
    const double denoised = std::round(pct * 1e9) / 1e9;
    const double truncated = std::trunc(denoised * 10.0) / 10.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", truncated);
    return buf;
}

// Top-k rows carry the ranking-partition metrics plus re-evaluations on the
// other partitions, since the study never states which one its table used.
struct TopKRow {
    int rank{0};
    ExitConfig config;
    MetricsReport train;
    MetricsReport test;
    MetricsReport full;
};

inline std::string top_k_to_csv(const std::vector<TopKRow>& rows) {
    std::string out = "rank,";
    out += exit_config_csv_header();
    for (const char* prefix : {"train", "test", "full"}) {
        for (const char* col : {"sharpe", "profit_factor", "max_dd", "total_pnl"}) {
            out += ',';
            out += prefix;
            out += '_';
            out += col;
        }
    }
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.rank);
        out += ',';
        out += exit_config_csv_row(r.config);
        for (const MetricsReport* m : {&r.train, &r.test, &r.full}) {
            out += ',';
            out += fixed6(m->sharpe);
            out += ',';
            out += fixed6(m->profit_factor);
            out += ',';
            out += fixed6(m->max_drawdown);
            out += ',';
            out += fixed6(m->total_pnl);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json diagnostics_to_json(const std::vector<RankedResult>& undefined,
                                                  const std::vector<std::string>& zero_atr) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& r : undefined) {
        nlohmann::ordered_json entry;
        entry["config"] = config_to_json(r.config);
        if (r.overlay) entry["overlay"] = overlay_to_json(*r.overlay);
        entry["reason"] = "undefined_sharpe";
        list.push_back(entry);
    }
    j["excluded_configs"] = list;
    j["zero_atr_trades"] = zero_atr;
    return j;
}

// ---- CSV reading -----------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError("CSV column not found: " + name);
    }
};

inline CsvTable parse_csv(const std::string& content) {
    CsvTable table;
    std::istringstream stream(content);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) table.header = std::move(fields);
        else table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) throw IoError("empty CSV");
    return table;
}

// Reads the top-k exit configurations from a pass-1 results file
// (grid_results.csv or top_k.csv; rows are already in rank order).
inline std::vector<ExitConfig> read_pass1_configs(const std::string& path, std::size_t top_k) {
    if (!std::filesystem::exists(path)) throw MissingPass1(path);
    const CsvTable table = parse_csv(read_text_file(path));
    const std::size_t sl = table.column("stop_loss");
    const std::size_t ta = table.column("trail_activation");
    const std::size_t td = table.column("trail_distance");
    const std::size_t ptp = table.column("ptp_threshold");
    const std::size_t pf = table.column("ptp_fraction");
    const std::size_t stale = table.column("stale_hours");
    std::vector<ExitConfig> configs;
    for (const auto& row : table.rows) {
        if (configs.size() >= top_k) break;
        ExitConfig c{std::stod(row[sl]), std::stod(row[ta]), std::stod(row[td]),
                     std::stod(row[ptp]), std::stod(row[pf]), std::stod(row[stale])};
        validate_config(c);
        configs.push_back(c);
    }
    if (configs.empty()) throw MissingPass1(path + " (no rows)");
    return configs;
}

// ---- run manifest ----------------------------------------------------------

inline std::string iso8601_utc(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    std::string dataset_digest;
    std::optional<std::uint64_t> seed;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    std::string started;
    std::string finished;
};

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["tool_version"] = kVersion;
    j["dataset_digest"] = m.dataset_digest;
    if (m.seed) j["seed"] = *m.seed;
    else j["seed"] = nullptr;
    j["parameters"] = m.parameters;
    j["started"] = m.started;
    j["finished"] = m.finished;
    return j;
}

inline void write_manifest(const std::string& out_dir, const RunManifest& m) {
    write_text_file(out_dir + "/manifest.json", manifest_to_json(m).dump(2) + "\n");
}

}  // namespace exitsim
