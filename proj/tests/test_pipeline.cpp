#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "candlekit/artifacts.hpp"
#include "candlekit/dgp.hpp"
#include "candlekit/io.hpp"
#include "candlekit/pipeline.hpp"

using namespace candlekit;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

SessionSpec ny_session() {
  SessionSpec s;
  s.utc_offset_minutes = -300;
  return s;
}

CriticalValues fake_candlestick_cv(const WeightVector& w, int k = 10) {
  CriticalValues cv;
  cv.k = k;
  cv.alpha = 0.05;
  cv.method = TestMethod::Candlestick;
  cv.lambda = w.as_array();
  cv.b_minus = -1.43;
  cv.b_plus = 1.46;
  cv.mc_reps = 10000;
  cv.m = 1000;
  cv.seed = 7;
  return cv;
}

PipelineConfig default_pipeline() {
  PipelineConfig cfg;
  cfg.weights = *published_weights(10);
  cfg.candlestick_critical_values = fake_candlestick_cv(cfg.weights);
  cfg.session = ny_session();
  return cfg;
}

}  // namespace

TEST_CASE("timestamp parsing") {
  CHECK(parse_timestamp("2024-01-02T14:30:00Z") == 1704205800);
  CHECK(parse_timestamp("2024-01-02 14:30") == 1704205800);
  CHECK(parse_timestamp("2024-01-02T09:30:00-05:00") == 1704205800);
  CHECK(parse_timestamp("2024-01-02T15:30:00.250+01:00") == 1704205800);
  CHECK(parse_timestamp("1704205800") == 1704205800);
  CHECK(parse_timestamp("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_timestamp("2000-03-01T00:00:00Z") == 951868800);
  CHECK(format_utc(1704205800) == "2024-01-02T14:30:00Z");
  for (const char* bad : {"", "2024-13-01T00:00Z", "2024-02-30T00:00Z", "yesterday",
                          "2024-01-02T14:30:00+0500"}) {
    CHECK(kind_of([&] { parse_timestamp(bad); }) == ErrorKind::Validation);
  }
}

TEST_CASE("decimal parsing is locale independent and round-trips") {
  CHECK(parse_decimal("1.5") == 1.5);
  CHECK(parse_decimal(" +2e-3 ") == 0.002);
  CHECK_THROWS_AS(parse_decimal("1,5"), Error);
  CHECK_THROWS_AS(parse_decimal("abc"), Error);
  for (double v : {0.1, 100.0 / 3, 1e-300, 123456.789012345}) {
    CHECK(parse_decimal(format_decimal(v)) == v);
  }
}

TEST_CASE("candle CSV reading and writing") {
  std::istringstream in(
      "symbol,close,low,high,open,timestamp\n"
      "SPY,10.5,9.5,11,10,2024-01-02T14:30:00Z\n"
      "AAPL,20,19,21,20,2024-01-02T14:30:00Z\n"
      "\n"
      "SPY,10.7,10.4,10.8,10.5,2024-01-02T14:31:00Z\n");
  const auto table = read_candle_csv(in);
  REQUIRE(table.size() == 2);
  CHECK(table.at("SPY").size() == 2);
  CHECK(table.at("SPY")[1].high == 10.8);
  CHECK(select_series(table, "AAPL").front().close == 20);
  CHECK_THROWS_AS(select_series(table), Error);
  CHECK_THROWS_AS(select_series(table, "MSFT"), Error);

  std::ostringstream out;
  write_candle_table(out, table);
  std::istringstream back(out.str());
  const auto again = read_candle_csv(back);
  CHECK(again.at("SPY")[1].close == table.at("SPY")[1].close);
  CHECK(again.at("AAPL")[0].timestamp == 1704205800);

  std::istringstream bad_order("timestamp,open,high,low,close\n0,10,9,8,9.5\n");
  CHECK_THROWS_WITH_AS(read_candle_csv(bad_order), doctest::Contains("line 2"), Error);
  std::istringstream repeated("timestamp,open,high,low,close\n60,10,11,9,10\n60,10,11,9,10\n");
  CHECK_THROWS_AS(read_candle_csv(repeated), Error);
  std::istringstream missing_col("timestamp,open,high,close\n60,10,11,10\n");
  CHECK_THROWS_AS(read_candle_csv(missing_col), Error);
  std::istringstream short_row("timestamp,open,high,low,close\n60,10,11,9\n");
  CHECK_THROWS_AS(read_candle_csv(short_row), Error);
  CHECK(kind_of([] { read_candle_csv_file("/nonexistent/candles.csv"); }) == ErrorKind::Io);
}

TEST_CASE("session alignment") {
  DgpConfig dgp;
  const auto day = simulate_day(dgp, 0);
  auto days = build_session_days(day.candles[0], day.candles[1], ny_session());
  REQUIRE(days.size() == 1);
  CHECK(days[0].date == "2024-01-02");
  CHECK(days[0].missing == 0);
  CHECK(days[0].triples.intervals() == 390);

  // Pre-market candles are ignored.
  auto market = day.candles[0];
  market.insert(market.begin(), Candle{dgp.day_start_epoch - 600, 100, 100, 100, 100});
  CHECK(build_session_days(market, day.candles[1], ny_session()).size() == 1);

  auto off = day.candles[1];
  off[100].timestamp += 30;
  CHECK(kind_of([&] { build_session_days(day.candles[0], off, ny_session()); }) ==
        ErrorKind::Alignment);

  CHECK(parse_clock("09:30") == 570);
  CHECK(format_clock(570) == "09:30");
  CHECK_THROWS_AS(parse_clock("9.30"), Error);
}

TEST_CASE("rolling estimates over one session") {
  DgpConfig dgp;
  const auto day = simulate_day(dgp, 1);
  const auto cfg = default_pipeline();

  const auto days = build_session_days(day.candles[0], day.candles[1], cfg.session);
  const auto rows = rolling_estimate(days, cfg);
  CHECK(rows.size() == 78);
  int cs = 0;
  for (const auto& r : rows) {
    CHECK(r.status == RowStatus::Ok);
    if (r.method == TestMethod::Candlestick) ++cs;
  }
  CHECK(cs == 39);
  CHECK(rows.front().anchor_time == "09:30");
  CHECK(rows.back().anchor_time == "15:50");

  // One missing candle in the asset kills exactly one window per method.
  auto asset = day.candles[1];
  asset.erase(asset.begin() + 55);
  const auto gappy = build_session_days(day.candles[0], asset, cfg.session);
  CHECK(gappy[0].missing == 1);
  const auto grows = rolling_estimate(gappy, cfg);
  CHECK(grows.size() == 78);
  int gaps = 0;
  for (const auto& r : grows) {
    if (r.status == RowStatus::Gap) {
      ++gaps;
      CHECK(r.anchor_time == "10:20");
      CHECK_FALSE(r.reject);
    }
  }
  CHECK(gaps == 2);
}

TEST_CASE("constant prices produce degenerate rows without rejections") {
  DgpConfig dgp;
  std::vector<Candle> flat;
  for (int i = 0; i < 390; ++i) flat.push_back({dgp.day_start_epoch + i * 60, 50, 50, 50, 50});
  const auto day = simulate_day(dgp, 2);
  const auto cfg = default_pipeline();
  const auto rows = rolling_estimate(build_session_days(flat, day.candles[1], cfg.session), cfg);
  CHECK(rows.size() == 78);
  for (const auto& r : rows) {
    CHECK(r.status == RowStatus::DegenerateMarket);
    CHECK_FALSE(r.reject);
  }
  const auto summary = reject_summary(rows);
  for (const auto& s : summary) {
    CHECK(s.tested == 0);
    CHECK(s.rejections == 0);
  }
}

TEST_CASE("pipeline configuration checks") {
  DgpConfig dgp;
  const auto day = simulate_day(dgp, 1);
  auto cfg = default_pipeline();
  const auto days = build_session_days(day.candles[0], day.candles[1], cfg.session);

  auto bad = cfg;
  bad.candlestick_critical_values->lambda[0] += 0.1;
  CHECK(kind_of([&] { rolling_estimate(days, bad); }) == ErrorKind::ArtifactMismatch);
  bad = cfg;
  bad.candlestick_critical_values->k = 5;
  CHECK(kind_of([&] { rolling_estimate(days, bad); }) == ErrorKind::ArtifactMismatch);
  bad = cfg;
  bad.candlestick_critical_values.reset();
  CHECK(kind_of([&] { rolling_estimate(days, bad); }) == ErrorKind::Validation);
  bad = cfg;
  bad.stride_seconds = 90;
  CHECK_THROWS_AS(rolling_estimate(days, bad), Error);
  bad = cfg;
  bad.k = 1;
  CHECK_THROWS_AS(rolling_estimate(days, bad), Error);

  // The return method needs no artifact.
  bad = cfg;
  bad.candlestick_critical_values.reset();
  bad.methods = {TestMethod::Return};
  CHECK(rolling_estimate(days, bad).size() == 39);
}

TEST_CASE("single-anchor estimates") {
  DgpConfig dgp;
  const auto day = simulate_day(dgp, 1);
  const auto cfg = default_pipeline();
  const auto days = build_session_days(day.candles[0], day.candles[1], cfg.session);
  const auto all = rolling_estimate(days, cfg);
  const auto at = estimate_at(days, cfg, parse_timestamp("2024-01-02T10:00:00-05:00"));
  REQUIRE(at.size() == 2);
  CHECK(at[0].anchor_time == "10:00");
  CHECK(at[0].beta_hat == all[6].beta_hat);
  CHECK(kind_of([&] { estimate_at(days, cfg, parse_timestamp("2024-01-02T15:55:00-05:00")); }) ==
        ErrorKind::OutOfRange);
  CHECK(kind_of([&] { estimate_at(days, cfg, parse_timestamp("2024-01-03T10:00:00-05:00")); }) ==
        ErrorKind::OutOfRange);
}

TEST_CASE("rows CSV round trip and monthly summary") {
  DgpConfig dgp;
  const auto cfg = default_pipeline();
  std::vector<Candle> m, a;
  for (int d = 0; d < 2; ++d) {
    DayOptions opts;
    opts.day_offset = d * 31;
    const auto day = simulate_day(dgp, d, opts);
    m.insert(m.end(), day.candles[0].begin(), day.candles[0].end());
    a.insert(a.end(), day.candles[1].begin(), day.candles[1].end());
  }
  const auto rows = rolling_estimate(build_session_days(m, a, cfg.session), cfg);
  std::stringstream buf;
  write_rows_csv(buf, rows);
  const auto back = read_rows_csv(buf);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].beta_hat == rows[i].beta_hat);
    CHECK(back[i].t_stat == rows[i].t_stat);
    CHECK(back[i].reject == rows[i].reject);
    CHECK(back[i].anchor_ts == rows[i].anchor_ts);
    CHECK(back[i].method == rows[i].method);
  }

  const auto summary = reject_summary(rows);
  REQUIRE(summary.size() == 4);
  CHECK(summary[0].month == "2024-01");
  CHECK(summary.back().month == "2024-02");
  for (const auto& s : summary) {
    int expect = 0;
    for (const auto& r : rows) {
      if (r.date.substr(0, 7) == s.month && r.method == s.method && r.reject) ++expect;
    }
    CHECK(s.rejections == expect);
    CHECK(s.tested == 39);
    CHECK(s.rate == doctest::Approx(expect / 39.0));
  }

  std::vector<RollingResultRow> alt(rows.begin(), rows.begin() + 78);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i].reject = (i / 2) % 2 == 0;
  for (const auto& s : reject_summary(alt)) CHECK(s.rate == doctest::Approx(20.0 / 39).epsilon(1e-12));
  for (auto& r : alt) r.reject = false;
  for (const auto& s : reject_summary(alt)) CHECK(s.rate == 0.0);

  std::istringstream bad("date,anchor_time\n");
  CHECK_THROWS_AS(read_rows_csv(bad), Error);
}

TEST_CASE("event windows") {
  DgpConfig dgp;
  const auto day = simulate_day(dgp, 4);
  const auto cfg = default_pipeline();
  const auto rows = rolling_estimate(build_session_days(day.candles[0], day.candles[1], cfg.session), cfg);
  const auto ev = event_window(rows, parse_timestamp("2024-01-02T14:00:00-05:00"), 60, cfg.session);
  CHECK(ev.size() == 26);
  double lo = 1e9, hi = -1e9;
  for (const auto& e : ev) {
    lo = std::min(lo, e.minutes_from_event);
    hi = std::max(hi, e.minutes_from_event);
  }
  CHECK(lo == -60);
  CHECK(hi == 60);
  std::ostringstream out;
  write_event_csv(out, ev);
  CHECK(out.str().rfind("minutes_from_event,date", 0) == 0);

  CHECK(kind_of([&] {
          event_window(rows, parse_timestamp("2024-01-02T17:00:00-05:00"), 60, cfg.session);
        }) == ErrorKind::OutOfRange);
  CHECK(kind_of([&] {
          event_window(rows, parse_timestamp("2024-01-05T14:00:00-05:00"), 60, cfg.session);
        }) == ErrorKind::OutOfRange);
}

TEST_CASE("artifact round trips") {
  CalibratedWeights cw;
  cw.weights = WeightVector{0.47, 0.21, 0.0123, 10, WeightProvenance::Calibrated};
  cw.config.k = 10;
  cw.config.rho_draws = 400;
  cw.config.paths_per_rho = 2500;
  cw.config.m = 1000;
  cw.config.seed = 7;
  cw.avg_risk = 0.3341;
  cw.mc_se = 0.0012;
  cw.condition_number = 321.5;
  const auto j = weights_to_json(cw);
  CHECK(j.at("schema") == "candlekit.weights.v1");
  CHECK(j.at("N") == 2);
  const auto back = weights_from_json(j);
  CHECK(back.weights.lambda1 == 0.47);
  CHECK(back.weights.lambda3 == 0.0123);
  CHECK(back.weights.k == 10);
  CHECK(back.config.paths_per_rho == 2500);
  CHECK(back.avg_risk == 0.3341);

  const auto path = (std::filesystem::temp_directory_path() / "candlekit_cv_test.json").string();
  const auto cv = fake_candlestick_cv(cw.weights);
  write_json_file(path, critvals_to_json(cv));
  const auto cv2 = critvals_from_json(read_json_file(path));
  std::remove(path.c_str());
  CHECK(cv2.b_minus == cv.b_minus);
  CHECK(cv2.b_plus == cv.b_plus);
  CHECK(cv2.lambda == cv.lambda);
  CHECK(cv2.method == TestMethod::Candlestick);
  CHECK(cv2.mc_reps == 10000);

  auto wrong = critvals_to_json(cv);
  wrong["schema"] = "candlekit.weights.v1";
  CHECK(kind_of([&] { critvals_from_json(wrong); }) == ErrorKind::ArtifactMismatch);
  auto broken = weights_to_json(cw);
  broken.erase("lambda");
  CHECK(kind_of([&] { weights_from_json(broken); }) == ErrorKind::Validation);
  CHECK(kind_of([] { read_json_file("/nonexistent/w.json"); }) == ErrorKind::Io);
}
