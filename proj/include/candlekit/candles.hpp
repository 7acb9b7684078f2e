#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "candlekit/error.hpp"

namespace candlekit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One OHLC record. The timestamp is the open time of the interval, in
/// seconds since the Unix epoch (UTC).
struct Candle {
  std::int64_t timestamp = 0;
  double open = 0;
  double high = 0;
  double low = 0;
  double close = 0;
};

inline constexpr double kOhlcRelativeSlack = 1e-12;

/// Throws ErrorKind::Validation unless prices are positive and
/// low <= min(open, close) <= max(open, close) <= high up to a relative
/// slack of kOhlcRelativeSlack.
void validate_candle(const Candle& c);

/// Regular grid of n intervals covering [span_start, span_end). Time is
/// measured in span units, so the interval length is delta_n = 1/n.
struct SamplingGrid {
  std::int64_t span_start = 0;
  std::int64_t span_end = 0;
  int n = 1;

  double delta_n() const noexcept { return 1.0 / n; }
  std::int64_t step_seconds() const noexcept { return (span_end - span_start) / n; }
  std::int64_t timestamp_of(int index) const noexcept {
    return span_start + static_cast<std::int64_t>(index) * step_seconds();
  }
};

/// Builds a grid and checks that the span divides evenly into n steps.
SamplingGrid make_grid(std::int64_t span_start, std::int64_t span_end, int n);

/// Normalized candlestick variables for one interval and N assets.
template <typename Scalar = double>
struct CandleTriple {
  Vector<Scalar> r, a, w, h, l;
};

/// A window of k intervals; column i holds interval i. Used both for
/// observed candlestick data and for simulated coupling variables.
template <typename Scalar = double>
struct TripleBlock {
  Matrix<Scalar> r, a, w;

  Eigen::Index assets() const noexcept { return r.rows(); }
  Eigen::Index size() const noexcept { return r.cols(); }
};

/// Full-span transform of aligned candle series; missing intervals are
/// kept as columns with present[i] == false.
template <typename Scalar = double>
struct TripleSeries {
  Matrix<Scalar> r, a, w, h, l;
  std::vector<bool> present;
  SamplingGrid grid;

  Eigen::Index assets() const noexcept { return r.rows(); }
  Eigen::Index intervals() const noexcept { return r.cols(); }
  CandleTriple<Scalar> triple(Eigen::Index i) const {
    return {r.col(i), a.col(i), w.col(i), h.col(i), l.col(i)};
  }
};

/// (r, h, l, a, w) for a single asset and interval from log prices.
template <typename Scalar>
struct LogCandleTransform {
  Scalar r, h, l, a, w;
};

template <typename Scalar>
LogCandleTransform<Scalar> transform_log_candle(Scalar log_open, Scalar log_high,
                                                Scalar log_low, Scalar log_close,
                                                Scalar delta_n) {
  using std::max;
  using std::min;
  using std::sqrt;
  const Scalar scale = Scalar(1) / sqrt(delta_n);
  // Snap the extremes onto the ordering that the validation slack allows
  // to be violated by rounding, so h >= max(0, r) and l <= min(0, r) hold.
  const Scalar hi = max(log_high, max(log_open, log_close));
  const Scalar lo = min(log_low, min(log_open, log_close));
  LogCandleTransform<Scalar> out;
  out.r = (log_close - log_open) * scale;
  out.h = (hi - log_open) * scale;
  out.l = (lo - log_open) * scale;
  out.w = out.h - out.l;
  out.a = out.h + out.l - out.r;
  return out;
}

/// Log-transforms each asset's candles and assembles N-vectors per
/// interval. series[j] is the candle sequence of asset j.
///
/// Throws Validation for bad OHLC ordering or non-increasing timestamps,
/// Alignment for candles off the grid. Intervals missing in any asset are
/// reported through TripleSeries::present instead of throwing.
TripleSeries<double> candles_to_triples(std::span<const std::vector<Candle>> series,
                                        const SamplingGrid& grid);

enum class WindowSide { Right };

struct WindowSpec {
  double t_anchor = 0;  // span units, in [0, 1)
  int k = 1;
  WindowSide side = WindowSide::Right;
};

/// Zero-based index of the first interval of the right-sided window,
/// ceil(t / delta_n). Anchors within 1e-9 of a grid point snap onto it.
int window_start(double t_anchor, const SamplingGrid& grid);

/// The k triples following t_anchor. Throws OutOfRange past the sample
/// end and Gap when any interval of the window is missing.
template <typename Scalar>
TripleBlock<Scalar> extract_window(const TripleSeries<Scalar>& series, const WindowSpec& spec) {
  if (spec.k < 1) fail(ErrorKind::Validation, "window size k must be positive");
  if (spec.t_anchor < 0) fail(ErrorKind::OutOfRange, "window anchor before span start");
  const int start = window_start(spec.t_anchor, series.grid);
  if (start + spec.k > series.intervals()) {
    fail(ErrorKind::OutOfRange, "window [" + std::to_string(start + 1) + ", " +
                                    std::to_string(start + spec.k) + "] exceeds n = " +
                                    std::to_string(series.intervals()));
  }
  for (int i = start; i < start + spec.k; ++i) {
    if (!series.present[static_cast<std::size_t>(i)]) {
      fail(ErrorKind::Gap, "interval " + std::to_string(i + 1) + " missing inside window");
    }
  }
  TripleBlock<Scalar> block;
  block.r = series.r.middleCols(start, spec.k);
  block.a = series.a.middleCols(start, spec.k);
  block.w = series.w.middleCols(start, spec.k);
  return block;
}

}  // namespace candlekit
