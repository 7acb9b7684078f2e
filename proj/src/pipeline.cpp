#include "candlekit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "candlekit/io.hpp"

namespace candlekit {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string format_date(std::int64_t day_index) {
  return format_utc(day_index * kDay).substr(0, 10);
}

}  // namespace

int SessionSpec::candles_per_session() const {
  return static_cast<int>((close_minute - open_minute) * 60 / candle_seconds);
}

void SessionSpec::validate() const {
  if (open_minute < 0 || close_minute > 24 * 60 || open_minute >= close_minute) {
    fail(ErrorKind::Validation, "session must open before it closes within one day");
  }
  if (candle_seconds < 1 || ((close_minute - open_minute) * 60) % candle_seconds != 0) {
    fail(ErrorKind::Validation, "candle length must divide the session length");
  }
  if (std::abs(utc_offset_minutes) > 18 * 60) fail(ErrorKind::Validation, "UTC offset out of range");
}

int parse_clock(std::string_view hhmm) {
  int h = 0, m = 0;
  if (hhmm.size() != 5 || hhmm[2] != ':' || std::sscanf(std::string(hhmm).c_str(), "%2d:%2d", &h, &m) != 2 ||
      h < 0 || h > 24 || m < 0 || m > 59 || (h == 24 && m != 0)) {
    fail(ErrorKind::Validation, "clock time must look like HH:MM, got '" + std::string(hhmm) + "'");
  }
  return h * 60 + m;
}

std::string format_clock(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

std::vector<SessionDay> build_session_days(const std::vector<Candle>& market,
                                           const std::vector<Candle>& asset,
                                           const SessionSpec& session) {
  session.validate();
  const std::int64_t offset = static_cast<std::int64_t>(session.utc_offset_minutes) * 60;
  const std::int64_t open_s = static_cast<std::int64_t>(session.open_minute) * 60;
  const std::int64_t close_s = static_cast<std::int64_t>(session.close_minute) * 60;

  std::map<std::int64_t, std::array<std::vector<Candle>, 2>> by_day;
  const std::array<const std::vector<Candle>*, 2> inputs{&market, &asset};
  for (std::size_t j = 0; j < 2; ++j) {
    for (const Candle& c : *inputs[j]) {
      const std::int64_t local = c.timestamp + offset;
      const std::int64_t day = floor_div(local, kDay);
      const std::int64_t second = local - day * kDay;
      if (second < open_s || second >= close_s) continue;
      by_day[day][j].push_back(c);
    }
  }

  std::vector<SessionDay> out;
  const int n = session.candles_per_session();
  for (const auto& [day, series] : by_day) {
    const std::int64_t start = day * kDay + open_s - offset;
    const SamplingGrid grid = make_grid(start, start + (close_s - open_s), n);
    SessionDay sd;
    sd.date = format_date(day);
    sd.triples = candles_to_triples(series, grid);
    sd.missing = static_cast<int>(std::count(sd.triples.present.begin(), sd.triples.present.end(), false));
    out.push_back(std::move(sd));
  }
  return out;
}

std::string_view to_string(RowStatus s) noexcept {
  switch (s) {
    case RowStatus::Ok: return "ok";
    case RowStatus::Gap: return "gap";
    case RowStatus::DegenerateMarket: return "degenerate-market";
    case RowStatus::DegenerateResidual: return "degenerate-residual";
  }
  return "ok";
}

RowStatus parse_row_status(std::string_view s) {
  for (const RowStatus r : {RowStatus::Ok, RowStatus::Gap, RowStatus::DegenerateMarket,
                            RowStatus::DegenerateResidual}) {
    if (to_string(r) == s) return r;
  }
  fail(ErrorKind::Validation, "unknown row status '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
  session.validate();
  if (k < 2) fail(ErrorKind::Validation, "inference needs k >= 2");
  if (!(alpha > 0 && alpha < 1)) fail(ErrorKind::Validation, "alpha must lie in (0, 1)");
  if (stride_seconds <= 0 || stride_seconds % session.candle_seconds != 0) {
    fail(ErrorKind::Validation, "stride must be a positive multiple of the candle length");
  }
  if (k > session.candles_per_session()) {
    fail(ErrorKind::Validation, "window of " + std::to_string(k) + " candles exceeds the session");
  }
  if (methods.empty()) fail(ErrorKind::Validation, "no test method selected");
}

namespace {

struct MethodSetup {
  TestConfig test;
  CriticalValues cv;
};

std::vector<MethodSetup> method_setups(const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<MethodSetup> setups;
  for (const TestMethod method : cfg.methods) {
    MethodSetup s;
    s.test.k = cfg.k;
    s.test.alpha = cfg.alpha;
    s.test.method = method;
    s.test.weights = cfg.weights;
    if (method == TestMethod::Return) {
      s.cv = student_t_critical_values(cfg.k, cfg.alpha);
    } else {
      if (!cfg.candlestick_critical_values) {
        fail(ErrorKind::Validation, "candlestick method needs a critical-values artifact");
      }
      s.cv = *cfg.candlestick_critical_values;
    }
    check_critical_values(s.test, s.cv);
    setups.push_back(s);
  }
  return setups;
}

// One row per method for the window starting at interval `start`.
void evaluate_anchor(const SessionDay& day, int start, const std::vector<MethodSetup>& setups,
                     const PipelineConfig& cfg, std::vector<RollingResultRow>& rows) {
  const int n = cfg.session.candles_per_session();
  const double t_anchor = static_cast<double>(start) / n;
  const int local_minute =
      cfg.session.open_minute + static_cast<int>(start * cfg.session.candle_seconds / 60);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const MethodSetup& s : setups) {
    RollingResultRow row;
    row.date = day.date;
    row.anchor_ts = day.triples.grid.timestamp_of(start);
    row.anchor_time = format_clock(local_minute);
    row.method = s.test.method;
    row.k = cfg.k;
    row.b_minus = s.cv.b_minus;
    row.b_plus = s.cv.b_plus;
    row.beta_hat = row.nu_hat = row.sigma2_hat = row.t_stat = nan;
    try {
      const auto block = extract_window(day.triples, WindowSpec{t_anchor, cfg.k});
      const auto est = spot_beta(estimate_spot_cov(block, s.test.effective_weights(), t_anchor));
      row.beta_hat = est.beta_hat;
      row.nu_hat = est.nu_hat;
      row.sigma2_hat = est.sigma2_hat;
      row.t_stat = test_statistic(est, 0.0, cfg.k);
      row.reject = rejects(row.t_stat, s.cv);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Gap: row.status = RowStatus::Gap; break;
        case ErrorKind::DegenerateMarket: row.status = RowStatus::DegenerateMarket; break;
        case ErrorKind::DegenerateResidual: row.status = RowStatus::DegenerateResidual; break;
        default: throw;
      }
      row.reject = false;
    }
    rows.push_back(row);
  }
}

}  // namespace

std::vector<RollingResultRow> rolling_estimate(const std::vector<SessionDay>& days,
                                               const PipelineConfig& cfg) {
  const auto setups = method_setups(cfg);
  const int n = cfg.session.candles_per_session();
  const int stride = static_cast<int>(cfg.stride_seconds / cfg.session.candle_seconds);
  std::vector<RollingResultRow> rows;
  for (const SessionDay& day : days) {
    for (int start = 0; start + cfg.k <= n; start += stride) {
      evaluate_anchor(day, start, setups, cfg, rows);
    }
  }
  return rows;
}

std::vector<RollingResultRow> estimate_at(const std::vector<SessionDay>& days,
                                          const PipelineConfig& cfg, std::int64_t anchor_ts) {
  const auto setups = method_setups(cfg);
  for (const SessionDay& day : days) {
    const SamplingGrid& grid = day.triples.grid;
    if (anchor_ts < grid.span_start || anchor_ts >= grid.span_end) continue;
    const double t = static_cast<double>(anchor_ts - grid.span_start) /
                     static_cast<double>(grid.span_end - grid.span_start);
    const int start = window_start(t, grid);
    if (start + cfg.k > grid.n) {
      fail(ErrorKind::OutOfRange, "window at " + format_utc(anchor_ts) + " runs past the session close");
    }
    std::vector<RollingResultRow> rows;
    evaluate_anchor(day, start, setups, cfg, rows);
    return rows;
  }
  fail(ErrorKind::OutOfRange, "anchor " + format_utc(anchor_ts) + " is not inside any session in the data");
}

namespace {

std::string field(double v) { return std::isnan(v) ? std::string() : format_decimal(v); }

double parse_field(std::string_view s) {
  return s.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_decimal(s);
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<RollingResultRow>& rows) {
  out << kRowsHeader << '\n';
  for (const auto& r : rows) {
    out << r.date << ',' << r.anchor_time << ',' << r.anchor_ts << ',' << to_string(r.method) << ','
        << r.k << ',' << field(r.beta_hat) << ',' << field(r.nu_hat) << ',' << field(r.sigma2_hat)
        << ',' << field(r.t_stat) << ',' << field(r.b_minus) << ',' << field(r.b_plus) << ','
        << (r.reject ? 1 : 0) << ',' << to_string(r.status) << '\n';
  }
}

std::vector<RollingResultRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Validation, "rows file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRowsHeader) fail(ErrorKind::Validation, "unexpected rows header");
  std::vector<RollingResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 13) {
      fail(ErrorKind::Validation, "line " + std::to_string(line_no) + ": expected 13 fields");
    }
    try {
      RollingResultRow r;
      r.date = std::string(f[0]);
      r.anchor_time = std::string(f[1]);
      r.anchor_ts = parse_timestamp(f[2]);
      r.method = parse_test_method(f[3]);
      r.k = static_cast<int>(parse_decimal(f[4]));
      r.beta_hat = parse_field(f[5]);
      r.nu_hat = parse_field(f[6]);
      r.sigma2_hat = parse_field(f[7]);
      r.t_stat = parse_field(f[8]);
      r.b_minus = parse_field(f[9]);
      r.b_plus = parse_field(f[10]);
      if (f[11] != "0" && f[11] != "1") fail(ErrorKind::Validation, "reject must be 0 or 1");
      r.reject = f[11] == "1";
      r.status = parse_row_status(f[12]);
      if (r.date.size() != 10) fail(ErrorKind::Validation, "date must be YYYY-MM-DD");
      rows.push_back(r);
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<MonthlyRejection> reject_summary(const std::vector<RollingResultRow>& rows) {
  std::map<std::pair<std::string, int>, MonthlyRejection> groups;
  for (const auto& r : rows) {
    const std::string month = r.date.substr(0, 7);
    auto& g = groups[{month, static_cast<int>(r.method)}];
    g.month = month;
    g.method = r.method;
    if (r.status == RowStatus::Ok) {
      ++g.tested;
      if (r.reject) ++g.rejections;
    } else {
      ++g.skipped;
    }
  }
  std::vector<MonthlyRejection> out;
  for (auto& [key, g] : groups) {
    g.rate = g.tested > 0 ? static_cast<double>(g.rejections) / g.tested
                          : std::numeric_limits<double>::quiet_NaN();
    out.push_back(g);
  }
  return out;
}

void write_reject_summary_csv(std::ostream& out, const std::vector<MonthlyRejection>& rows) {
  out << "month,method,tested,rejections,skipped,rejection_rate\n";
  for (const auto& r : rows) {
    out << r.month << ',' << to_string(r.method) << ',' << r.tested << ',' << r.rejections << ','
        << r.skipped << ',' << field(r.rate) << '\n';
  }
}

std::vector<EventRow> event_window(const std::vector<RollingResultRow>& rows,
                                   std::int64_t event_ts, int window_minutes,
                                   const SessionSpec& session) {
  session.validate();
  if (window_minutes < 0) fail(ErrorKind::Validation, "event window must be nonnegative");
  const std::int64_t local = event_ts + static_cast<std::int64_t>(session.utc_offset_minutes) * 60;
  const std::int64_t day = floor_div(local, kDay);
  const std::int64_t second = local - day * kDay;
  if (second < session.open_minute * 60 || second > session.close_minute * 60) {
    fail(ErrorKind::OutOfRange, "event at " + format_utc(event_ts) + " lies outside the session");
  }
  const std::string date = format_date(day);
  std::vector<EventRow> out;
  bool any_on_date = false;
  for (const auto& r : rows) {
    if (r.date != date) continue;
    any_on_date = true;
    const std::int64_t diff = r.anchor_ts - event_ts;
    if (std::abs(diff) <= static_cast<std::int64_t>(window_minutes) * 60) {
      out.push_back({r, static_cast<double>(diff) / 60.0});
    }
  }
  if (!any_on_date) fail(ErrorKind::OutOfRange, "no estimates on the event date " + date);
  return out;
}

void write_event_csv(std::ostream& out, const std::vector<EventRow>& rows) {
  out << "minutes_from_event," << kRowsHeader << '\n';
  for (const auto& e : rows) {
    out << format_decimal(e.minutes_from_event) << ',';
    std::ostringstream one;
    write_rows_csv(one, {e.row});
    const std::string s = one.str();
    out << s.substr(s.find('\n') + 1);
  }
}

}  // namespace candlekit
