#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exitsim {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MalformedRecord : Error {
    std::size_t line_no;
    explicit MalformedRecord(std::size_t line, const std::string& detail)
        : Error("malformed record at line " + std::to_string(line) + ": " + detail),
          line_no(line) {}
};

struct InvariantViolation : Error {
    std::string trade_id;
    std::string reason;
    InvariantViolation(std::string id, std::string why)
        : Error("trade '" + id + "': " + why), trade_id(std::move(id)), reason(std::move(why)) {}
};

struct DuplicateTradeId : Error {
    std::string trade_id;
    explicit DuplicateTradeId(std::string id)
        : Error("duplicate trade_id '" + id + "'"), trade_id(std::move(id)) {}
};

struct EmptyDataset : Error {
    EmptyDataset() : Error("dataset contains no trades") {}
};

struct InsufficientTrades : Error {
    explicit InsufficientTrades(std::size_t n)
        : Error("need at least 2 trades to split, got " + std::to_string(n)) {}
};

struct EmptyPath : Error {
    explicit EmptyPath(const std::string& id) : Error("trade '" + id + "' has an empty path") {}
};

struct NonPositivePrice : Error {
    explicit NonPositivePrice(const std::string& where)
        : Error("non-positive price in " + where) {}
};

struct InsufficientPoints : Error {
    explicit InsufficientPoints(std::size_t n)
        : Error("ATR needs at least 2 points, got " + std::to_string(n)) {}
};

struct InsufficientSpan : Error {
    InsufficientSpan() : Error("equity curve must span at least 2 distinct UTC days") {}
};

struct NoTrades : Error {
    NoTrades() : Error("no trade outcomes to aggregate") {}
};

struct MisalignedSizing : Error {
    MisalignedSizing(std::size_t outcomes, std::size_t pnl)
        : Error("sized_pnl has " + std::to_string(pnl) + " entries for " +
                std::to_string(outcomes) + " outcomes") {}
};

struct EmptyAxis : Error {
    explicit EmptyAxis(const std::string& axis) : Error("grid axis '" + axis + "' is empty") {}
};

struct UnknownAxis : Error {
    explicit UnknownAxis(const std::string& axis)
        : Error("unknown parameter axis '" + axis + "'") {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct MissingPass1 : Error {
    explicit MissingPass1(const std::string& path)
        : Error("pass-1 results not found: " + path) {}
};

struct MissingResults : Error {
    explicit MissingResults(const std::string& what) : Error("missing results: " + what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace exitsim
