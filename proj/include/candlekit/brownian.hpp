#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "candlekit/candles.hpp"
#include "candlekit/estimator.hpp"
#include "candlekit/random.hpp"

namespace candlekit {

/// Correlation matrix together with a square root, factor * factor' = rho.
struct CorrelationFactor {
  Eigen::MatrixXd rho;
  Eigen::MatrixXd factor;

  Eigen::Index dimension() const noexcept { return rho.rows(); }

  /// Lower-triangular Cholesky root (the default choice).
  static CorrelationFactor cholesky(const Eigen::MatrixXd& rho);
  /// Symmetric square root via the eigendecomposition of rho.
  static CorrelationFactor symmetric(const Eigen::MatrixXd& rho);
  static CorrelationFactor identity(Eigen::Index n);
  static Eigen::MatrixXd bivariate(double rho);
};

/// Draws rho ~ Uniform(-1, 1) and returns its Cholesky factor. Only N = 2.
CorrelationFactor sample_uniform_correlation(Substream& rng, int n_assets);

struct PathConfig {
  int k = 10;
  int m = 1000;  // sub-steps per interval used for the running extremes
  std::uint64_t seed = 7;
  int n_assets = 2;
};

inline constexpr int kDefaultSubsteps = 1000;
inline constexpr int kSmokeSubsteps = 100;

/// Endpoint of the raw Brownian path and the element-wise extremes of the
/// rotated path factor * W over the grid points 0, 1/m, ..., 1.
struct PathExtremes {
  Eigen::VectorXd endpoint;  // W(1), raw frame
  Eigen::VectorXd sup;       // rotated frame
  Eigen::VectorXd inf;       // rotated frame
};

/// increments is N x m (column j is the step into grid point j+1).
PathExtremes path_extremes(const Eigen::Ref<const Eigen::MatrixXd>& increments,
                           const Eigen::MatrixXd& factor);

/// Coupling variables of a window: column i holds (zeta_r, zeta_a, zeta_w)
/// for interval i, plus the weighted matrix U once build_U has run.
struct CouplingSample {
  TripleBlock<double> zeta;
  Eigen::MatrixXd U;
};

/// Simulates windows of coupling variables for a fixed correlation factor.
/// Holds scratch buffers, so one instance per thread.
class CouplingSimulator {
 public:
  CouplingSimulator(const PathConfig& cfg, const CorrelationFactor& factor);

  /// Fills `zeta` with k intervals drawn from `rng`.
  void draw(Substream& rng, TripleBlock<double>& zeta);
  TripleBlock<double> draw(Substream& rng);

  const PathConfig& config() const noexcept { return cfg_; }

 private:
  PathConfig cfg_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd factor_inverse_;
  Eigen::MatrixXd increments_;
};

/// One window of coupling variables from substream (seed, replication).
CouplingSample simulate_coupling_block(const PathConfig& cfg, const CorrelationFactor& factor,
                                       std::uint64_t replication = 0);

/// U = (1/k) sum {l1 zr zr' + l2 za za' + l3 zw zw'}, symmetrized.
Eigen::MatrixXd build_U(const TripleBlock<double>& zeta, const WeightVector& weights, int k);
Eigen::MatrixXd build_U(const CouplingSample& sample, const WeightVector& weights, int k);

struct CrossMomentConfig {
  int samples = 20000;  // simulated intervals per grid point
  int m = kDefaultSubsteps;
  std::uint64_t seed = 7;
};

struct CrossMomentRow {
  double rho = 0;
  double rho_r = 0, rho_a = 0, rho_w = 0;
  double se_r = 0, se_a = 0, se_w = 0;
  int samples = 0;
};

/// Correlations of (r1, r2), (a1, a2), (w1, w2) for unit-volatility
/// bivariate Brownian motion with correlation rho, by simulation.
std::vector<CrossMomentRow> cross_moment_curve(std::span<const double> rho_grid,
                                               const CrossMomentConfig& cfg);

}  // namespace candlekit
