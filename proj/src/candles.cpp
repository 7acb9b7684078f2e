#include "candlekit/candles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace candlekit {

void validate_candle(const Candle& c) {
  const bool positive = c.open > 0 && c.high > 0 && c.low > 0 && c.close > 0;
  if (!positive || !std::isfinite(c.open) || !std::isfinite(c.high) || !std::isfinite(c.low) ||
      !std::isfinite(c.close)) {
    fail(ErrorKind::Validation,
         "candle at " + std::to_string(c.timestamp) + ": prices must be finite and positive");
  }
  const double top = std::max(c.open, c.close);
  const double bottom = std::min(c.open, c.close);
  if (c.high < top * (1 - kOhlcRelativeSlack) || c.low > bottom * (1 + kOhlcRelativeSlack)) {
    fail(ErrorKind::Validation,
         "candle at " + std::to_string(c.timestamp) + ": OHLC ordering violated");
  }
}

SamplingGrid make_grid(std::int64_t span_start, std::int64_t span_end, int n) {
  if (n < 1) fail(ErrorKind::Validation, "grid needs at least one interval");
  if (span_end <= span_start) fail(ErrorKind::Validation, "grid span is empty");
  if ((span_end - span_start) % n != 0) {
    fail(ErrorKind::Validation, "grid span is not a whole number of intervals");
  }
  return {span_start, span_end, n};
}

TripleSeries<double> candles_to_triples(std::span<const std::vector<Candle>> series,
                                        const SamplingGrid& grid) {
  if (series.empty()) fail(ErrorKind::Validation, "no asset series given");
  const auto n_assets = static_cast<Eigen::Index>(series.size());
  const int n = grid.n;
  const std::int64_t step = grid.step_seconds();
  if (step <= 0) fail(ErrorKind::Validation, "grid step must be positive");

  TripleSeries<double> out;
  out.grid = grid;
  for (auto* m : {&out.r, &out.a, &out.w, &out.h, &out.l}) m->setZero(n_assets, n);
  std::vector<int> seen(static_cast<std::size_t>(n), 0);

  const double dn = grid.delta_n();
  for (Eigen::Index j = 0; j < n_assets; ++j) {
    std::int64_t previous = 0;
    bool first = true;
    for (const Candle& c : series[static_cast<std::size_t>(j)]) {
      if (!first && c.timestamp <= previous) {
        fail(ErrorKind::Validation, "asset " + std::to_string(j) +
                                        ": timestamps not strictly increasing at " +
                                        std::to_string(c.timestamp));
      }
      first = false;
      previous = c.timestamp;
      validate_candle(c);
      const std::int64_t offset = c.timestamp - grid.span_start;
      if (offset < 0 || c.timestamp >= grid.span_end || offset % step != 0) {
        fail(ErrorKind::Alignment, "asset " + std::to_string(j) + ": candle at " +
                                       std::to_string(c.timestamp) + " is off the sampling grid");
      }
      const auto i = static_cast<Eigen::Index>(offset / step);
      const auto t = transform_log_candle(std::log(c.open), std::log(c.high), std::log(c.low),
                                          std::log(c.close), dn);
      out.r(j, i) = t.r;
      out.h(j, i) = t.h;
      out.l(j, i) = t.l;
      out.a(j, i) = t.a;
      out.w(j, i) = t.w;
      ++seen[static_cast<std::size_t>(i)];
    }
  }
  out.present.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.present[static_cast<std::size_t>(i)] = seen[static_cast<std::size_t>(i)] == n_assets;
  }
  return out;
}

int window_start(double t_anchor, const SamplingGrid& grid) {
  const double x = t_anchor / grid.delta_n();
  return static_cast<int>(std::ceil(x - 1e-9));
}

}  // namespace candlekit
