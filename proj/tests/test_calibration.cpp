#include <doctest.h>

#include <cmath>
#include <random>

#include "candlekit/calibration.hpp"
#include "candlekit/parallel.hpp"

using namespace candlekit;

namespace {

CalibrationConfig small_config() {
  CalibrationConfig cfg;
  cfg.k = 10;
  cfg.rho_draws = 40;
  cfg.paths_per_rho = 100;
  cfg.m = 100;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("weighted half-vectorization") {
  Eigen::Matrix2d a;
  a << 1, 0, 0, 0;
  CHECK(weighted_vech(a) == Eigen::Vector3d(1, 0, 0));
  a << 2, 3, 3, 5;
  const auto v = weighted_vech(a);
  CHECK(v(0) == 2);
  CHECK(v(1) == doctest::Approx(3 * std::sqrt(2.0)));
  CHECK(v(2) == 5);
  CHECK(v.squaredNorm() == doctest::Approx(a.squaredNorm()));
  Eigen::Matrix3d b = Eigen::Matrix3d::Random();
  b = (b + b.transpose()).eval();
  CHECK(weighted_vech(b).size() == 6);
  CHECK(weighted_vech(b).squaredNorm() == doctest::Approx(b.squaredNorm()));
}

TEST_CASE("accumulator bookkeeping") {
  TripleBlock<double> zero;
  zero.r = zero.a = zero.w = Eigen::MatrixXd::Zero(2, 10);
  DesignAccumulator acc;
  accumulate_design(zero, acc);
  CHECK(acc.count == 1);
  CHECK(acc.gram.isZero(0.0));
  CHECK(acc.moment.isZero(0.0));
  CHECK(acc.target == 2.0);
  // An all-zero design cannot be solved.
  try {
    solve_lambda_star(acc);
    FAIL("expected a calibration failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CalibrationFailure);
  }
  try {
    solve_lambda_star(DesignAccumulator{});
    FAIL("expected a calibration failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CalibrationFailure);
  }
}

TEST_CASE("least-squares weights solve the normal equations and minimize the risk") {
  const auto cfg = small_config();
  const auto run = simulate_design(cfg);
  const auto acc = run.total();
  CHECK(acc.count == 4000);
  CHECK((acc.gram - acc.gram.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(acc.gram);
  CHECK(eig.eigenvalues().minCoeff() > 0);

  const auto sol = solve_lambda_star(acc, cfg.k);
  const Eigen::Vector3d lam = sol.weights.as_vector();
  const Eigen::Vector3d resid = acc.gram * lam - acc.moment;
  CHECK(resid.norm() < 1e-9 * acc.moment.norm());

  // Average risk recomputed window by window from the design matrices.
  double direct = 0;
  for (std::size_t g = 0; g < run.groups.size(); ++g) direct += average_risk(run.groups[g], lam) * run.groups[g].count;
  CHECK(direct / acc.count == doctest::Approx(sol.avg_risk).epsilon(1e-10));

  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0, 0.3);
  const double best = average_risk(acc, lam);
  CHECK(best <= average_risk(acc, Eigen::Vector3d(1, 0, 0)));
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d probe = lam + Eigen::Vector3d(n(gen), n(gen), n(gen));
    CHECK(best <= average_risk(acc, probe) + 1e-12);
  }
}

TEST_CASE("average risk equals the mean squared Frobenius loss") {
  const auto factor = CorrelationFactor::cholesky(CorrelationFactor::bivariate(0.2));
  DesignAccumulator acc;
  double loss = 0;
  const WeightVector w = WeightVector::manual(0.4, 0.2, 0.05);
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    const auto s = simulate_coupling_block({5, 50, 3, 2}, factor, rep);
    accumulate_design(s.zeta, acc);
    loss += (build_U(s, w, 5) - Eigen::Matrix2d::Identity()).squaredNorm();
  }
  CHECK(average_risk(acc, w.as_vector()) == doctest::Approx(loss / 300).epsilon(1e-10));
}

TEST_CASE("calibration is reproducible across runs and thread counts") {
  auto cfg = small_config();
  cfg.rho_draws = 12;
  set_thread_count(1);
  const auto a = calibrate(cfg);
  set_thread_count(3);
  const auto b = calibrate(cfg);
  set_thread_count(1);
  CHECK(a.weights.lambda1 == b.weights.lambda1);
  CHECK(a.weights.lambda2 == b.weights.lambda2);
  CHECK(a.weights.lambda3 == b.weights.lambda3);
  CHECK(a.mc_se == b.mc_se);
  CHECK(a.mc_se > 0);
  CHECK(a.weights.provenance == WeightProvenance::Calibrated);

  cfg.seed = 8;
  const auto c = calibrate(cfg);
  CHECK(c.weights.lambda1 != a.weights.lambda1);
}

TEST_CASE("calibration inputs") {
  auto cfg = small_config();
  cfg.n_assets = 3;
  try {
    calibrate(cfg);
    FAIL("expected an unsupported-dimension error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedDimension);
  }
  cfg = small_config();
  cfg.rho_draws = 0;
  CHECK_THROWS_AS(calibrate(cfg), Error);

  // One sub-step makes za identically zero, so the design is singular.
  cfg = small_config();
  cfg.m = 1;
  try {
    calibrate(cfg);
    FAIL("expected a calibration failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CalibrationFailure);
  }

  cfg = small_config();
  cfg.rho_draws = 5;
  cfg.rho_sampler = [](Substream&) { return 0.25; };
  const auto run = simulate_design(cfg);
  for (double r : run.rhos) CHECK(r == 0.25);
}

TEST_CASE("return-only risk") {
  CHECK(return_only_risk(5) == doctest::Approx(1.2));
  CHECK(return_only_risk(10) == doctest::Approx(0.6));
  CHECK(return_only_risk(20) == doctest::Approx(0.3));
  const auto mc = asymptotic_risk(WeightVector::return_only(), 0.5, 5, {20000, 10, 7});
  CHECK(std::abs(mc.mean - 1.2) < 3 * mc.se);
}

TEST_CASE("candlestick and oracle weights beat returns") {
  const RiskConfig rc{4000, 200, 7};
  for (double rho : {0.0, 0.8}) {
    const auto cs = asymptotic_risk(*published_weights(10), rho, 10, rc);
    const auto ow = oracle_weights(rho, 10, rc);
    const auto orc = asymptotic_risk(ow, rho, 10, rc);
    CHECK(cs.mean < return_only_risk(10));
    CHECK(orc.mean <= cs.mean + 3 * cs.se);
    CHECK(ow.provenance == WeightProvenance::Manual);
  }
}

TEST_CASE("risk does not depend on the choice of square root") {
  const std::vector<double> rhos{-0.6, 0.5};
  const auto rows = factor_sensitivity(*published_weights(5), 5, rhos, {4000, 100, 7});
  for (const auto& r : rows) {
    const double se = std::hypot(r.cholesky.se, r.symmetric.se);
    CHECK(std::abs(r.cholesky.mean - r.symmetric.mean) < 4 * se);
  }
}
