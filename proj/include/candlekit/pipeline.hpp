#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "candlekit/candles.hpp"
#include "candlekit/inference.hpp"

namespace candlekit {

/// Trading session in local clock time. Local time is UTC plus
/// utc_offset_minutes; every local date is an independent span.
struct SessionSpec {
  int open_minute = 9 * 60 + 30;
  int close_minute = 16 * 60;
  int utc_offset_minutes = 0;
  std::int64_t candle_seconds = 60;

  int candles_per_session() const;
  void validate() const;
};

/// "HH:MM" -> minutes after midnight.
int parse_clock(std::string_view hhmm);
std::string format_clock(int minutes);

struct SessionDay {
  std::string date;  // local YYYY-MM-DD
  TripleSeries<double> triples;
  int missing = 0;
};

/// Aligns the market and asset series on each session's grid. Candles
/// outside the session are ignored; candles inside it but off the grid
/// throw Alignment.
std::vector<SessionDay> build_session_days(const std::vector<Candle>& market,
                                           const std::vector<Candle>& asset,
                                           const SessionSpec& session);

enum class RowStatus { Ok, Gap, DegenerateMarket, DegenerateResidual };

std::string_view to_string(RowStatus s) noexcept;
RowStatus parse_row_status(std::string_view s);

struct RollingResultRow {
  std::string date;
  std::int64_t anchor_ts = 0;
  std::string anchor_time;  // local HH:MM
  TestMethod method = TestMethod::Candlestick;
  int k = 0;
  double beta_hat = 0;
  double nu_hat = 0;
  double sigma2_hat = 0;
  double t_stat = 0;
  double b_minus = 0;
  double b_plus = 0;
  bool reject = false;
  RowStatus status = RowStatus::Ok;
};

struct PipelineConfig {
  int k = 10;
  std::int64_t stride_seconds = 600;
  double alpha = 0.05;
  std::vector<TestMethod> methods{TestMethod::Candlestick, TestMethod::Return};
  WeightVector weights;
  std::optional<CriticalValues> candlestick_critical_values;
  SessionSpec session;

  void validate() const;
};

/// One row per (day, anchor, method); anchors every stride from the
/// session open while the k-candle window fits. Windows with gaps or
/// degenerate estimates are recorded with a non-Ok status.
std::vector<RollingResultRow> rolling_estimate(const std::vector<SessionDay>& days,
                                               const PipelineConfig& cfg);

/// Rows for the single window starting at the first grid point at or after
/// anchor_ts. Throws OutOfRange when no session contains the anchor.
std::vector<RollingResultRow> estimate_at(const std::vector<SessionDay>& days,
                                          const PipelineConfig& cfg, std::int64_t anchor_ts);

inline constexpr std::string_view kRowsHeader =
    "date,anchor_time,anchor_ts,method,k,beta_hat,nu_hat,sigma2_hat,t_stat,b_minus,b_plus,"
    "reject,status";

void write_rows_csv(std::ostream& out, const std::vector<RollingResultRow>& rows);
std::vector<RollingResultRow> read_rows_csv(std::istream& in);

struct MonthlyRejection {
  std::string month;  // YYYY-MM
  TestMethod method = TestMethod::Candlestick;
  int tested = 0;
  int rejections = 0;
  int skipped = 0;
  double rate = 0;
};

/// Rejection rate over Ok rows per (month, method).
std::vector<MonthlyRejection> reject_summary(const std::vector<RollingResultRow>& rows);
void write_reject_summary_csv(std::ostream& out, const std::vector<MonthlyRejection>& rows);

struct EventRow {
  RollingResultRow row;
  double minutes_from_event = 0;
};

/// Rows whose anchor lies within +-window_minutes of the event, re-timed
/// relative to it. Throws OutOfRange when the event is outside the
/// session or no rows exist on its date.
std::vector<EventRow> event_window(const std::vector<RollingResultRow>& rows,
                                   std::int64_t event_ts, int window_minutes,
                                   const SessionSpec& session);
void write_event_csv(std::ostream& out, const std::vector<EventRow>& rows);

}  // namespace candlekit
