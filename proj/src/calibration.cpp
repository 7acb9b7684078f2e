#include "candlekit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "candlekit/parallel.hpp"

namespace candlekit {

Eigen::VectorXd weighted_vech(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) fail(ErrorKind::Validation, "vech needs a square matrix");
  Eigen::VectorXd out(n * (n + 1) / 2);
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      out(idx++) = i == j ? a(i, j) : std::sqrt(2.0) * a(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd design_matrix(const TripleBlock<double>& zeta) {
  const double k = static_cast<double>(zeta.size());
  if (zeta.size() < 1) fail(ErrorKind::Validation, "empty coupling block");
  const Eigen::Index n = zeta.assets();
  Eigen::MatrixXd pi(n * (n + 1) / 2, 3);
  pi.col(0) = weighted_vech(zeta.r * zeta.r.transpose() / k);
  pi.col(1) = weighted_vech(zeta.a * zeta.a.transpose() / k);
  pi.col(2) = weighted_vech(zeta.w * zeta.w.transpose() / k);
  return pi;
}

void accumulate_design(const TripleBlock<double>& zeta, DesignAccumulator& acc) {
  const Eigen::MatrixXd pi = design_matrix(zeta);
  const Eigen::VectorXd y =
      weighted_vech(Eigen::MatrixXd::Identity(zeta.assets(), zeta.assets()));
  acc.gram.noalias() += pi.transpose() * pi;
  acc.moment.noalias() += pi.transpose() * y;
  acc.target += y.squaredNorm();
  ++acc.count;
}

double average_risk(const DesignAccumulator& acc, const Eigen::Vector3d& lambda) {
  if (acc.count == 0) fail(ErrorKind::CalibrationFailure, "no simulated windows");
  const double total = lambda.dot(acc.gram * lambda) - 2.0 * lambda.dot(acc.moment) + acc.target;
  return total / static_cast<double>(acc.count);
}

CalibratedWeights solve_lambda_star(const DesignAccumulator& acc, int k) {
  if (acc.count == 0) fail(ErrorKind::CalibrationFailure, "no simulated windows");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(acc.gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxGramCondition)) {
    fail(ErrorKind::CalibrationFailure,
         "design gram matrix is ill-conditioned (condition number " + std::to_string(cond) + ")");
  }
  const Eigen::Vector3d lambda = acc.gram.ldlt().solve(acc.moment);
  if (!lambda.allFinite()) fail(ErrorKind::CalibrationFailure, "non-finite weight solution");

  CalibratedWeights out;
  out.weights = {lambda(0), lambda(1), lambda(2), k, WeightProvenance::Calibrated};
  out.avg_risk = average_risk(acc, lambda);
  out.condition_number = cond;
  out.design = acc;
  return out;
}

DesignAccumulator CalibrationRun::total() const {
  DesignAccumulator acc;
  for (const auto& g : groups) acc += g;
  return acc;
}

namespace {

void check_config(const CalibrationConfig& cfg) {
  if (cfg.k < 1) fail(ErrorKind::Validation, "window size k must be positive");
  if (cfg.rho_draws < 1 || cfg.paths_per_rho < 1) {
    fail(ErrorKind::Validation, "calibration needs at least one draw and one path");
  }
  if (cfg.m < 1) fail(ErrorKind::Validation, "sub-step count m must be positive");
  if (cfg.n_assets != 2) {
    fail(ErrorKind::UnsupportedDimension,
         "calibration is implemented for N = 2 only (got N = " + std::to_string(cfg.n_assets) +
             ")");
  }
}

CorrelationFactor bivariate_factor(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) {
    fail(ErrorKind::SingularFactor, "correlation " + std::to_string(rho) + " outside (-1, 1)");
  }
  return CorrelationFactor::cholesky(CorrelationFactor::bivariate(rho));
}

}  // namespace

CalibrationRun simulate_design(const CalibrationConfig& cfg) {
  check_config(cfg);
  const auto draws = static_cast<std::size_t>(cfg.rho_draws);
  CalibrationRun run;
  run.rhos.resize(draws);
  run.groups.resize(draws);
  parallel_for(draws, [&](std::size_t g) {
    Substream rho_rng(cfg.seed, Domain::CalibrationRho, g);
    double rho;
    if (cfg.rho_sampler) {
      rho = cfg.rho_sampler(rho_rng);
    } else {
      rho = sample_uniform_correlation(rho_rng, cfg.n_assets).rho(0, 1);
    }
    CouplingSimulator sim({cfg.k, cfg.m, cfg.seed, cfg.n_assets}, bivariate_factor(rho));
    TripleBlock<double> zeta;
    DesignAccumulator acc;
    for (int p = 0; p < cfg.paths_per_rho; ++p) {
      Substream rng(cfg.seed, Domain::CalibrationBlock,
                    (static_cast<std::uint64_t>(g) << 32) | static_cast<std::uint64_t>(p));
      sim.draw(rng, zeta);
      accumulate_design(zeta, acc);
    }
    run.rhos[g] = rho;
    run.groups[g] = acc;
  });
  return run;
}

CalibratedWeights calibrate(const CalibrationConfig& cfg) {
  const CalibrationRun run = simulate_design(cfg);
  CalibratedWeights out = solve_lambda_star(run.total(), cfg.k);
  out.config = cfg;
  const Eigen::Vector3d lambda = out.weights.as_vector();
  const double g = static_cast<double>(run.groups.size());
  if (run.groups.size() > 1) {
    double sum = 0, sum2 = 0;
    for (const auto& grp : run.groups) {
      const double r = average_risk(grp, lambda);
      sum += r;
      sum2 += r * r;
    }
    const double var = (sum2 - sum * sum / g) / (g - 1);
    out.mc_se = std::sqrt(std::max(var, 0.0) / g);
  }
  return out;
}

namespace {

void check_risk_config(const RiskConfig& cfg, int k) {
  if (k < 1) fail(ErrorKind::Validation, "window size k must be positive");
  if (cfg.reps < 2) fail(ErrorKind::Validation, "risk estimation needs at least 2 replications");
  if (cfg.m < 1) fail(ErrorKind::Validation, "sub-step count m must be positive");
}

}  // namespace

RiskEstimate asymptotic_risk(const WeightVector& weights, double rho, int k, const RiskConfig& cfg,
                             bool symmetric_factor) {
  check_risk_config(cfg, k);
  if (!weights.finite()) fail(ErrorKind::Validation, "non-finite weights");
  if (!(rho > -1.0 && rho < 1.0)) {
    fail(ErrorKind::SingularFactor, "correlation " + std::to_string(rho) + " outside (-1, 1)");
  }
  const Eigen::MatrixXd corr = CorrelationFactor::bivariate(rho);
  const CorrelationFactor factor =
      symmetric_factor ? CorrelationFactor::symmetric(corr) : CorrelationFactor::cholesky(corr);

  const auto reps = static_cast<std::size_t>(cfg.reps);
  const std::size_t chunks = chunk_count(reps);
  std::vector<std::array<double, 2>> partial(chunks, {0.0, 0.0});
  parallel_for(chunks, [&](std::size_t c) {
    CouplingSimulator sim({k, cfg.m, cfg.seed, 2}, factor);
    TripleBlock<double> zeta;
    const std::size_t end = std::min(reps, (c + 1) * kChunk);
    for (std::size_t rep = c * kChunk; rep < end; ++rep) {
      Substream rng(cfg.seed, Domain::RiskBlock, rep);
      sim.draw(rng, zeta);
      const Eigen::MatrixXd U = build_U(zeta, weights, k);
      const double loss = (U - Eigen::MatrixXd::Identity(2, 2)).squaredNorm();
      partial[c][0] += loss;
      partial[c][1] += loss * loss;
    }
  });
  double sum = 0, sum2 = 0;
  for (const auto& p : partial) {
    sum += p[0];
    sum2 += p[1];
  }
  const double n = static_cast<double>(reps);
  const double var = (sum2 - sum * sum / n) / (n - 1);
  return {sum / n, std::sqrt(std::max(var, 0.0) / n), cfg.reps};
}

WeightVector oracle_weights(double rho, int k, const RiskConfig& cfg) {
  check_risk_config(cfg, k);
  const CorrelationFactor factor = bivariate_factor(rho);
  const auto reps = static_cast<std::size_t>(cfg.reps);
  const std::size_t chunks = chunk_count(reps);
  std::vector<DesignAccumulator> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    CouplingSimulator sim({k, cfg.m, cfg.seed, 2}, factor);
    TripleBlock<double> zeta;
    const std::size_t end = std::min(reps, (c + 1) * kChunk);
    for (std::size_t rep = c * kChunk; rep < end; ++rep) {
      Substream rng(cfg.seed, Domain::OracleBlock, rep);
      sim.draw(rng, zeta);
      accumulate_design(zeta, partial[c]);
    }
  });
  DesignAccumulator acc;
  for (const auto& p : partial) acc += p;
  WeightVector w = solve_lambda_star(acc, k).weights;
  w.provenance = WeightProvenance::Manual;
  return w;
}

double return_only_risk(int k, int n_assets) {
  if (k < 1) fail(ErrorKind::Validation, "window size k must be positive");
  if (n_assets < 1) fail(ErrorKind::Validation, "asset count must be positive");
  const double n = n_assets;
  return (n * n + n) / k;
}

std::vector<RiskTableRow> risk_table(std::span<const int> ks, std::span<const double> rhos,
                                     const std::function<WeightVector(int)>& weights_for,
                                     const RiskConfig& cfg) {
  std::vector<RiskTableRow> rows;
  for (const int k : ks) {
    const WeightVector cw = weights_for(k);
    for (const double rho : rhos) {
      RiskTableRow row;
      row.k = k;
      row.rho = rho;
      row.return_risk = {return_only_risk(k), 0.0, 0};
      row.candlestick_weights = cw;
      row.candlestick_risk = asymptotic_risk(cw, rho, k, cfg);
      row.oracle_weights = oracle_weights(rho, k, cfg);
      row.oracle_risk = asymptotic_risk(row.oracle_weights, rho, k, cfg);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<FactorSensitivityRow> factor_sensitivity(const WeightVector& weights, int k,
                                                     std::span<const double> rhos,
                                                     const RiskConfig& cfg) {
  std::vector<FactorSensitivityRow> rows;
  for (const double rho : rhos) {
    rows.push_back({rho, asymptotic_risk(weights, rho, k, cfg, false),
                    asymptotic_risk(weights, rho, k, cfg, true)});
  }
  return rows;
}

}  // namespace candlekit
