#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "exitsim/errors.hpp"
#include "exitsim/rng.hpp"
#include "exitsim/types.hpp"

namespace exitsim {

inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

namespace detail {

inline double parse_price_field(const nlohmann::json& v, const char* field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string& s = v.get_ref<const std::string&>();
        std::size_t pos = 0;
        double parsed = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError(std::string(field) + " is not a valid decimal");
        return parsed;
    }
    throw ConfigError(std::string(field) + " must be a number or decimal string");
}

inline std::vector<PricePoint> parse_points(const nlohmann::json& arr, const char* field) {
    if (!arr.is_array()) throw ConfigError(std::string(field) + " must be an array");
    std::vector<PricePoint> points;
    points.reserve(arr.size());
    for (const auto& e : arr) {
        PricePoint pt;
        pt.t = e.at("t").get<TimeMs>();
        pt.price = parse_price_field(e.at("p"), field);
        points.push_back(pt);
    }
    return points;
}

}  // namespace detail

// Parses one JSON-lines record. Structural problems (bad JSON, missing or
// mistyped fields) surface as MalformedRecord via the caller; semantic
// problems are reported by validate_trade.
inline TradeRecord parse_trade_line(const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    TradeRecord trade;
    trade.trade_id = j.at("trade_id").get<std::string>();
    trade.symbol = j.at("symbol").get<std::string>();
    const std::string side = j.at("side").get<std::string>();
    if (side == "long") {
        trade.side = Side::Long;
    } else if (side == "short") {
        trade.side = Side::Short;
    } else {
        throw ConfigError("side must be \"long\" or \"short\"");
    }
    trade.entry_time = j.at("entry_time").get<TimeMs>();
    trade.entry_price = detail::parse_price_field(j.at("entry_price"), "entry_price");
    trade.path = detail::parse_points(j.at("path"), "path");
    if (j.contains("lookback")) trade.lookback = detail::parse_points(j["lookback"], "lookback");
    return trade;
}

inline nlohmann::ordered_json trade_to_json(const TradeRecord& trade) {
    nlohmann::ordered_json j;
    j["trade_id"] = trade.trade_id;
    j["symbol"] = trade.symbol;
    j["side"] = to_string(trade.side);
    j["entry_time"] = trade.entry_time;
    j["entry_price"] = trade.entry_price;
    auto points_json = [](const std::vector<PricePoint>& pts) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& pt : pts) arr.push_back({{"t", pt.t}, {"p", pt.price}});
        return arr;
    };
    j["path"] = points_json(trade.path);
    if (!trade.lookback.empty()) j["lookback"] = points_json(trade.lookback);
    return j;
}

inline void sort_trades(std::vector<TradeRecord>& trades) {
    std::sort(trades.begin(), trades.end(), [](const TradeRecord& a, const TradeRecord& b) {
        if (a.entry_time != b.entry_time) return a.entry_time < b.entry_time;
        return a.trade_id < b.trade_id;
    });
}

// Builds a Dataset from already-parsed records: validates, rejects duplicate
// ids, sorts by (entry_time, trade_id).
inline Dataset make_dataset(std::vector<TradeRecord> trades, std::string digest = "") {
    if (trades.empty()) throw EmptyDataset();
    std::unordered_set<std::string> seen;
    for (const auto& trade : trades) {
        validate_trade(trade);
        if (!seen.insert(trade.trade_id).second) throw DuplicateTradeId(trade.trade_id);
    }
    sort_trades(trades);
    return Dataset{std::move(trades), std::move(digest)};
}

inline Dataset load_dataset_from_string(const std::string& content) {
    std::vector<TradeRecord> trades;
    std::istringstream stream(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            trades.push_back(parse_trade_line(line));
        } catch (const InvariantViolation&) {
            throw;
        } catch (const std::exception& e) {
            throw MalformedRecord(line_no, e.what());
        }
    }
    return make_dataset(std::move(trades), fnv1a64_hex(content));
}

inline Dataset load_dataset(const std::string& file_path) {
    std::ifstream in(file_path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + file_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_dataset_from_string(buf.str());
}

inline std::string serialize_dataset(const Dataset& dataset) {
    std::string out;
    for (const auto& trade : dataset.trades) {
        out += trade_to_json(trade).dump();
        out += '\n';
    }
    return out;
}

// Non-throwing per-record validation, used by the validate command.
struct ValidationIssue {
    std::size_t line_no{0};
    std::string trade_id;
    std::string message;
};

struct ValidationReport {
    std::size_t n_valid{0};
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty() && n_valid > 0; }
};

inline ValidationReport validate_file(const std::string& file_path) {
    ValidationReport report;
    std::ifstream in(file_path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + file_path);
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string id;
        try {
            TradeRecord trade = parse_trade_line(line);
            id = trade.trade_id;
            validate_trade(trade);
            if (!seen.insert(trade.trade_id).second) throw DuplicateTradeId(trade.trade_id);
            ++report.n_valid;
        } catch (const std::exception& e) {
            report.issues.push_back({line_no, id, e.what()});
        }
    }
    if (report.n_valid == 0 && report.issues.empty())
        report.issues.push_back({0, "", "EmptyDataset: file contains no records"});
    return report;
}

enum class SplitMode { Chronological, Randomized };

struct SplitSpec {
    SplitMode mode{SplitMode::Chronological};
    double train_fraction{0.7};
    std::uint64_t seed{0};  // consumed only in Randomized mode
};

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Partitions the dataset. Chronological: first floor(n*f) trades by entry
// order go to train. Randomized: Fisher-Yates permutation (see rng.hpp)
// of the sorted trade order, split at floor(n*f), then each side is
// re-sorted by entry time so sequence-dependent logic stays chronological.
inline SplitResult split(const Dataset& dataset, const SplitSpec& spec) {
    const std::size_t n = dataset.size();
    if (n < 2) throw InsufficientTrades(n);
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0,1)");

    const auto n_train =
        static_cast<std::size_t>(static_cast<double>(n) * spec.train_fraction);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (spec.mode == SplitMode::Randomized) {
        Xoshiro256StarStar rng(spec.seed);
        fisher_yates_shuffle(order, rng);
    }

    SplitResult result;
    result.train.trades.reserve(n_train);
    result.test.trades.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        auto& side = (i < n_train) ? result.train.trades : result.test.trades;
        side.push_back(dataset.trades[order[i]]);
    }
    sort_trades(result.train.trades);
    sort_trades(result.test.trades);
    result.train.source_digest = dataset.source_digest;
    result.test.source_digest = dataset.source_digest;
    return result;
}

}  // namespace exitsim
