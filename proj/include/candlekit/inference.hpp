#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "candlekit/brownian.hpp"
#include "candlekit/estimator.hpp"

namespace candlekit {

enum class TestMethod { Candlestick, Return };

std::string_view to_string(TestMethod m) noexcept;
TestMethod parse_test_method(std::string_view s);

struct TestConfig {
  int k = 10;
  double alpha = 0.05;
  TestMethod method = TestMethod::Candlestick;
  WeightVector weights;
  int mc_reps = 10000;
  int m = kDefaultSubsteps;
  std::uint64_t seed = 7;

  WeightVector effective_weights() const {
    return method == TestMethod::Return ? WeightVector::return_only(k) : weights;
  }
};

struct CriticalValues {
  double b_minus = 0;
  double b_plus = 0;
  int k = 0;
  double alpha = 0;
  TestMethod method = TestMethod::Return;
  std::array<double, 3> lambda{1, 0, 0};
  int mc_reps = 0;  // 0 for analytic Student-t bounds
  int m = 0;
  std::uint64_t seed = 0;
  std::uint64_t discarded = 0;

  bool analytic() const noexcept { return mc_reps == 0; }
  double width() const noexcept { return b_plus - b_minus; }
};

struct TestResult {
  double t_stat = 0;
  CriticalValues critical_values;
  bool reject = false;
  double beta_hat = 0;
  double nu_hat = 0;
  double sigma2_hat = 0;
  double t_anchor = 0;
};

/// sqrt(k-1) (beta_hat - beta0) / sqrt(sigma2_hat / nu_hat).
double test_statistic(const BetaEstimate<double>& est, double beta0, int k);

/// Limit of the statistic under beta = 0 in terms of the coupling matrix:
/// sqrt(k-1) U12 / sqrt(det U), i.e. -sqrt(k-1) [U^-1]12 /
/// sqrt([U^-1]11 [U^-1]22 - [U^-1]12^2). Returns NaN when U is not
/// positive definite.
double null_statistic(const Eigen::Matrix2d& U, int k);

struct NullSample {
  std::vector<double> sorted;
  std::uint64_t discarded = 0;
};

inline constexpr double kMaxDiscardedShare = 1e-3;

/// Draws mc_reps statistics from identity-factor coupling windows with the
/// configured weights. Singular draws are dropped and counted; more than
/// kMaxDiscardedShare of them throws SingularDraws.
NullSample simulate_null_T(const TestConfig& cfg);

/// Narrowest window of ceil((1-alpha) m) consecutive order statistics,
/// lowest start on ties.
std::pair<double, double> hdi_interval(std::span<const double> sorted, double alpha);

/// Central window with as many order statistics as the HDI, for comparison.
std::pair<double, double> equal_tailed_interval(std::span<const double> sorted, double alpha);

double student_t_quantile(double p, double dof);
double student_t_cdf(double x, double dof);

CriticalValues student_t_critical_values(int k, double alpha);
CriticalValues simulated_critical_values(const TestConfig& cfg);
/// Analytic bounds for the return method, simulated ones otherwise.
CriticalValues critical_values(const TestConfig& cfg);

/// Throws ArtifactMismatch unless cv was produced for cfg's (k, alpha,
/// method) and, for the candlestick method, the same weights.
void check_critical_values(const TestConfig& cfg, const CriticalValues& cv);

/// reject iff t <= b_minus or t >= b_plus.
bool rejects(double t_stat, const CriticalValues& cv) noexcept;

TestResult run_beta_test(const TripleBlock<double>& block, const TestConfig& cfg,
                         const CriticalValues& cv, double t_anchor = 0);

struct KsResult {
  double statistic = 0;
  double p_value = 0;
};

/// One-sample Kolmogorov-Smirnov test of a sorted sample against
/// Student-t(dof), p-value from the asymptotic Kolmogorov law with
/// Stephens' small-sample correction.
KsResult ks_test_student_t(std::span<const double> sorted, double dof);

}  // namespace candlekit
