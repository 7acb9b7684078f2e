#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "candlekit/candles.hpp"

namespace candlekit {

/// Integer epoch seconds or ISO-8601 "YYYY-MM-DD[T ]HH:MM[:SS[.fff]]" with
/// optional "Z" or "+HH:MM"/"-HH:MM" suffix (no suffix means UTC).
/// Throws Validation on anything else.
std::int64_t parse_timestamp(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc(std::int64_t epoch_seconds);

/// Locale-independent decimal parse (dot separator). Throws Validation.
double parse_decimal(std::string_view text);

/// Shortest decimal text that reads back to the same double.
std::string format_decimal(double value);

/// Candle series keyed by symbol; files without a symbol column use "".
using CandleTable = std::map<std::string, std::vector<Candle>>;

/// Reads `timestamp,open,high,low,close[,symbol]` (columns matched by
/// header name, any order). Validates OHLC ordering per row and strictly
/// increasing timestamps per symbol.
CandleTable read_candle_csv(std::istream& in);
CandleTable read_candle_csv_file(const std::string& path);

/// The only series of a single-symbol table, or the named one.
std::vector<Candle> select_series(const CandleTable& table, const std::string& symbol = {});

void write_candle_csv(std::ostream& out, const std::vector<Candle>& candles,
                      const std::string& symbol = {});

/// All series of a table in one file with a symbol column.
void write_candle_table(std::ostream& out, const CandleTable& table);

/// Splits a CSV line on commas (no quoting support beyond trimming spaces).
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace candlekit
