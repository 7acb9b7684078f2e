#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "candlekit/candles.hpp"

namespace testutil {

// A valid candle with the given log-open and random intra-interval moves.
inline candlekit::Candle random_candle(std::mt19937_64& gen, std::int64_t ts, double log_open) {
  std::normal_distribution<double> n(0.0, 0.01);
  std::uniform_real_distribution<double> u(0.0, 0.01);
  const double lc = log_open + n(gen);
  const double lh = std::max(log_open, lc) + u(gen);
  const double ll = std::min(log_open, lc) - u(gen);
  return {ts, std::exp(log_open), std::exp(lh), std::exp(ll), std::exp(lc)};
}

inline std::vector<candlekit::Candle> random_series(std::mt19937_64& gen, std::int64_t start,
                                                    std::int64_t step, int n) {
  std::vector<candlekit::Candle> out;
  double lo = std::log(50.0);
  for (int i = 0; i < n; ++i) {
    out.push_back(random_candle(gen, start + i * step, lo));
    lo = std::log(out.back().close);
  }
  return out;
}

inline candlekit::TripleBlock<double> random_block(std::mt19937_64& gen, int n_assets, int k) {
  std::normal_distribution<double> n(0.0, 1.0);
  candlekit::TripleBlock<double> b;
  b.r.resize(n_assets, k);
  b.a.resize(n_assets, k);
  b.w.resize(n_assets, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n_assets; ++i) {
      b.r(i, j) = n(gen);
      b.a(i, j) = n(gen);
      b.w(i, j) = std::abs(n(gen)) + std::abs(b.r(i, j));
    }
  }
  return b;
}

}  // namespace testutil
