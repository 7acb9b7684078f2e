#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "candlekit/candles.hpp"
#include "candlekit/inference.hpp"

namespace candlekit {

enum class BetaPath { TimeVarying, Constant };

inline constexpr std::int64_t kSessionSeconds = 23400;

/// Two-factor square-root market variance with leverage, a regression
/// second asset, and Euler simulation on a one-second grid.
struct DgpConfig {
  double kappa1 = 0.0128, theta1 = 0.4068, xi1 = 0.0954;
  double kappa2 = 0.6930, theta2 = 0.4068, xi2 = 0.7023;
  double gamma = -0.7;
  BetaPath beta_path = BetaPath::TimeVarying;
  double beta_constant = 1.0;
  int euler_steps_per_day = 23400;
  int candles_per_day = 390;
  double initial_price = 100.0;
  // Variances are in percent^2 per day, so prices are p0 * exp(0.01 * X).
  double log_price_scale = 0.01;
  std::int64_t day_start_epoch = 1704205800;  // 2024-01-02 14:30:00 UTC
  std::uint64_t seed = 7;

  int steps_per_candle() const { return euler_steps_per_day / candles_per_day; }
  std::int64_t candle_seconds() const { return kSessionSeconds / candles_per_day; }
  void validate() const;
};

/// beta(t) and the idiosyncratic-to-market variance ratio at day time t in [0, 1].
double dgp_beta(const DgpConfig& cfg, double t);
double dgp_idio_ratio(double t);

struct VarianceState {
  double v1 = 0;
  double v2 = 0;

  static VarianceState stationary_mean(const DgpConfig& cfg) { return {cfg.theta1, cfg.theta2}; }
};

struct SimulatedDay {
  std::array<std::vector<Candle>, 2> candles;
  // Latent paths on the Euler grid (empty unless requested).
  Eigen::VectorXd nu, varsigma, beta;
  Eigen::VectorXd x1, x2;  // log returns since the open, in percent, on the Euler grid
  VarianceState final_state;
};

struct DayOptions {
  int n_candles = -1;  // -1: the whole day; otherwise a prefix
  bool retain_latent = false;
  VarianceState initial;  // defaults to the stationary mean when both are zero
  std::int64_t day_offset = 0;  // calendar day index added to day_start_epoch
};

/// One day from substream (cfg.seed, DgpDay, replication). Prefixes of the
/// same replication are bit-identical to the full day.
SimulatedDay simulate_day(const DgpConfig& cfg, std::uint64_t replication,
                          const DayOptions& opts = {});

/// Daily samples of (V1, V2) from `chains` independent chains started at
/// the stationary mean, each `days` long.
struct VariancePaths {
  Eigen::MatrixXd v1;  // chains x (days + 1)
  Eigen::MatrixXd v2;
};
VariancePaths simulate_variance_paths(const DgpConfig& cfg, int chains, int days,
                                      int steps_per_day);

/// A test to run in a power study with its precomputed bounds.
struct StudyTest {
  TestConfig config;
  CriticalValues critical_values;
};

struct PowerRow {
  TestMethod method = TestMethod::Return;
  int k = 0;
  double alpha = 0;
  std::string beta_label;
  double beta = 0;  // constant beta, or beta at the window anchor
  double rejection_rate = 0;
  int reps = 0;
  double mc_se = 0;
  int failures = 0;  // windows where the statistic was undefined
};

/// Simulates `reps` days and tests H0: beta = 0 on the first k candles of
/// each day (anchor t = 0) for every test.
std::vector<PowerRow> run_power_study(const DgpConfig& cfg, std::span<const StudyTest> tests,
                                      int reps);

/// run_power_study over a grid of constant betas.
std::vector<PowerRow> power_curve(const DgpConfig& cfg, std::span<const double> betas,
                                  std::span<const StudyTest> tests, int reps);

}  // namespace candlekit
