#include "candlekit/io.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

namespace candlekit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, long long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Fixed-width unsigned field; returns false on any non-digit.
bool digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  long long v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = static_cast<int>(v);
  return true;
}

[[noreturn]] void bad_timestamp(std::string_view text) {
  fail(ErrorKind::Validation, "unparseable timestamp '" + std::string(text) + "'");
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty()) bad_timestamp(text);
  long long epoch = 0;
  if (parse_int(s, epoch)) return epoch;

  int y, mo, d, h, mi, sec = 0;
  if (!digits(s, 0, 4, y) || s.size() < 16 || s[4] != '-' || !digits(s, 5, 2, mo) || s[7] != '-' ||
      !digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') || !digits(s, 11, 2, h) ||
      s[13] != ':' || !digits(s, 14, 2, mi)) {
    bad_timestamp(text);
  }
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!digits(s, pos + 1, 2, sec)) bad_timestamp(text);
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      const std::size_t frac = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == frac) bad_timestamp(text);
    }
  }
  int offset_minutes = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      // UTC
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      int oh, om;
      if (!digits(s, pos + 1, 2, oh) || !digits(s, pos + 4, 2, om)) bad_timestamp(text);
      offset_minutes = (s[pos] == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      bad_timestamp(text);
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) bad_timestamp(text);
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since) * 86400 + h * 3600 + mi * 60 + sec -
         offset_minutes * 60;
}

std::string format_utc(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{epoch_seconds}};
  const sys_days day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

double parse_decimal(std::string_view text) {
  std::string_view s = trim(text);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::Validation, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::string format_decimal(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

CandleTable read_candle_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) fail(ErrorKind::Validation, "candle file is empty");

  const auto header = split_csv_line(line);
  std::optional<std::size_t> col_ts, col_o, col_h, col_l, col_c, col_sym;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name(header[i]);
    for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (name == "timestamp") col_ts = i;
    else if (name == "open") col_o = i;
    else if (name == "high") col_h = i;
    else if (name == "low") col_l = i;
    else if (name == "close") col_c = i;
    else if (name == "symbol") col_sym = i;
  }
  if (!col_ts || !col_o || !col_h || !col_l || !col_c) {
    fail(ErrorKind::Validation, "candle header needs timestamp, open, high, low and close columns");
  }

  CandleTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorKind::Validation, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields");
    }
    Candle c;
    try {
      c.timestamp = parse_timestamp(fields[*col_ts]);
      c.open = parse_decimal(fields[*col_o]);
      c.high = parse_decimal(fields[*col_h]);
      c.low = parse_decimal(fields[*col_l]);
      c.close = parse_decimal(fields[*col_c]);
      validate_candle(c);
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    auto& series = table[col_sym ? std::string(fields[*col_sym]) : std::string()];
    if (!series.empty() && c.timestamp <= series.back().timestamp) {
      fail(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                      ": timestamps must be strictly increasing");
    }
    series.push_back(c);
  }
  return table;
}

CandleTable read_candle_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return read_candle_csv(in);
}

std::vector<Candle> select_series(const CandleTable& table, const std::string& symbol) {
  if (symbol.empty()) {
    if (table.size() != 1) {
      fail(ErrorKind::Validation, "file holds " + std::to_string(table.size()) +
                                      " symbols; name the one to use");
    }
    return table.begin()->second;
  }
  const auto it = table.find(symbol);
  if (it == table.end()) fail(ErrorKind::Validation, "symbol '" + symbol + "' not found");
  return it->second;
}

void write_candle_csv(std::ostream& out, const std::vector<Candle>& candles,
                      const std::string& symbol) {
  out << "timestamp,open,high,low,close" << (symbol.empty() ? "" : ",symbol") << '\n';
  for (const auto& c : candles) {
    out << format_utc(c.timestamp) << ',' << format_decimal(c.open) << ','
        << format_decimal(c.high) << ',' << format_decimal(c.low) << ','
        << format_decimal(c.close);
    if (!symbol.empty()) out << ',' << symbol;
    out << '\n';
  }
}

void write_candle_table(std::ostream& out, const CandleTable& table) {
  out << "timestamp,open,high,low,close,symbol\n";
  for (const auto& [symbol, candles] : table) {
    for (const auto& c : candles) {
      out << format_utc(c.timestamp) << ',' << format_decimal(c.open) << ','
          << format_decimal(c.high) << ',' << format_decimal(c.low) << ','
          << format_decimal(c.close) << ',' << symbol << '\n';
    }
  }
}

}  // namespace candlekit
