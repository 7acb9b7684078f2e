#pragma once

#include <cstdint>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace candlekit {

// Independent simulation families. A substream is addressed by
// (seed, domain, index); the same address always yields the same draws,
// so work can be split across threads without changing any result.
enum class Domain : std::uint64_t {
  CalibrationRho = 1,
  CalibrationBlock = 2,
  RiskBlock = 3,
  OracleBlock = 4,
  NullStatistic = 5,
  CrossMoment = 6,
  DgpDay = 7,
  Generic = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t substream_key(std::uint64_t seed, Domain domain,
                                      std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(domain)) ^
                    index);
}

/// Deterministic random source for one replication.
///
/// Draws inside a replication are consumed sequentially in a fixed order
/// (interval, sub-step, asset), so every (replication, interval, sub-step)
/// maps to a fixed position of a fixed substream. mt19937_64 is
/// specified bit-exactly by the C++ standard and Boost's ziggurat normal is
/// portable, so sequences agree across platforms.
class Substream {
 public:
  Substream(std::uint64_t seed, Domain domain, std::uint64_t index)
      : engine_(substream_key(seed, domain, index)) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  boost::random::mt19937_64& engine() noexcept { return engine_; }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace candlekit
