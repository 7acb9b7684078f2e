#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "candlekit/brownian.hpp"
#include "candlekit/estimator.hpp"

namespace candlekit {

/// Draws the off-diagonal correlation for one calibration group.
using RhoSampler = std::function<double(Substream&)>;

struct CalibrationConfig {
  int k = 10;
  int n_assets = 2;
  int rho_draws = 400;
  int paths_per_rho = 2500;
  int m = kDefaultSubsteps;
  std::uint64_t seed = 7;
  RhoSampler rho_sampler;  // empty: Uniform(-1, 1)
};

/// Running sums of Pi'Pi and Pi'y over simulated windows, where the columns
/// of Pi are the weighted half-vectorizations of the window averages of
/// zr zr', za za', zw zw' and y = vech(I).
struct DesignAccumulator {
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();
  double target = 0;  // sum of |y|^2
  std::uint64_t count = 0;

  DesignAccumulator& operator+=(const DesignAccumulator& other) {
    gram += other.gram;
    moment += other.moment;
    target += other.target;
    count += other.count;
    return *this;
  }
};

/// Lower-triangle half-vectorization with off-diagonal entries scaled by
/// sqrt(2), so that |vech_w(A)|^2 equals the squared Frobenius norm of A
/// for symmetric A.
Eigen::VectorXd weighted_vech(const Eigen::MatrixXd& a);

/// The N(N+1)/2 x 3 design matrix of one window.
Eigen::MatrixXd design_matrix(const TripleBlock<double>& zeta);

void accumulate_design(const TripleBlock<double>& zeta, DesignAccumulator& acc);

struct CalibratedWeights {
  WeightVector weights;
  CalibrationConfig config;
  double avg_risk = 0;  // in-sample average risk at the solution
  double mc_se = 0;     // standard error across correlation draws
  double condition_number = 0;
  DesignAccumulator design;
};

inline constexpr double kMaxGramCondition = 1e12;

/// lambda* = gram^{-1} moment. Throws CalibrationFailure when the gram is
/// empty or its condition number exceeds kMaxGramCondition.
CalibratedWeights solve_lambda_star(const DesignAccumulator& acc, int k = 0);

/// Average risk sum |Pi lambda - y|^2 / count read off the accumulator.
double average_risk(const DesignAccumulator& acc, const Eigen::Vector3d& lambda);

/// Per-draw accumulators of a calibration run, in draw order.
struct CalibrationRun {
  std::vector<double> rhos;
  std::vector<DesignAccumulator> groups;

  DesignAccumulator total() const;
};

CalibrationRun simulate_design(const CalibrationConfig& cfg);

/// Full calibration: simulate, solve, attach the risk standard error.
CalibratedWeights calibrate(const CalibrationConfig& cfg);

struct RiskConfig {
  int reps = 10000;
  int m = kDefaultSubsteps;
  std::uint64_t seed = 7;
};

struct RiskEstimate {
  double mean = 0;
  double se = 0;
  int reps = 0;
};

/// Monte Carlo estimate of E|U(lambda) - I|^2 at a fixed correlation.
/// Windows come from the RiskBlock substream family, so estimates for
/// different lambda at the same (rho, k, cfg) share random numbers.
RiskEstimate asymptotic_risk(const WeightVector& weights, double rho, int k, const RiskConfig& cfg,
                             bool symmetric_factor = false);

/// Risk-minimizing weights when rho is known. Fitted on the OracleBlock
/// substream family so they are independent of asymptotic_risk's draws.
WeightVector oracle_weights(double rho, int k, const RiskConfig& cfg);

/// Exact risk of the return-only estimator, (N^2 + N) / k for N = 2.
double return_only_risk(int k, int n_assets = 2);

struct RiskTableRow {
  int k = 0;
  double rho = 0;
  RiskEstimate return_risk;
  RiskEstimate candlestick_risk;
  RiskEstimate oracle_risk;
  WeightVector candlestick_weights;
  WeightVector oracle_weights;
};

/// weights_for(k) supplies the candlestick weights of each row.
std::vector<RiskTableRow> risk_table(std::span<const int> ks, std::span<const double> rhos,
                                     const std::function<WeightVector(int)>& weights_for,
                                     const RiskConfig& cfg);

struct FactorSensitivityRow {
  double rho = 0;
  RiskEstimate cholesky;
  RiskEstimate symmetric;
};

/// Risk of fixed weights under the Cholesky and the symmetric square root
/// of each correlation on the grid.
std::vector<FactorSensitivityRow> factor_sensitivity(const WeightVector& weights, int k,
                                                     std::span<const double> rhos,
                                                     const RiskConfig& cfg);

}  // namespace candlekit
