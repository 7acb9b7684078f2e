#include <doctest.h>

#include <cmath>
#include <vector>

#include "candlekit/brownian.hpp"
#include "candlekit/calibration.hpp"
#include "candlekit/parallel.hpp"

using namespace candlekit;

namespace {

struct MeanSe {
  double mean, se;
};

MeanSe mean_se(const std::vector<double>& x) {
  double s = 0, s2 = 0;
  for (double v : x) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(x.size());
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

}  // namespace

TEST_CASE("correlation factors reproduce the correlation") {
  for (double rho : {-0.95, -0.3, 0.0, 0.4, 0.999}) {
    const auto corr = CorrelationFactor::bivariate(rho);
    const auto ch = CorrelationFactor::cholesky(corr);
    const auto sy = CorrelationFactor::symmetric(corr);
    CHECK((ch.factor * ch.factor.transpose() - corr).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((sy.factor * sy.factor.transpose() - corr).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ch.factor(0, 1) == 0.0);
    CHECK((sy.factor - sy.factor.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  const double eps = 1e-3;
  const auto near = CorrelationFactor::cholesky(CorrelationFactor::bivariate(1 - eps));
  CHECK(near.factor(1, 0) == doctest::Approx(1 - eps).epsilon(1e-12));
  CHECK(near.factor(1, 1) == doctest::Approx(std::sqrt(2 * eps - eps * eps)).epsilon(1e-10));

  CHECK_THROWS_AS(CorrelationFactor::cholesky(CorrelationFactor::bivariate(1.0)), Error);
  Eigen::Matrix2d not_corr;
  not_corr << 2, 0, 0, 1;
  CHECK_THROWS_AS(CorrelationFactor::cholesky(not_corr), Error);
  Eigen::Matrix3d indefinite;
  indefinite << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  try {
    CorrelationFactor::cholesky(indefinite);
    FAIL("expected a singular-factor error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularFactor);
  }
}

TEST_CASE("uniform correlation sampler") {
  std::vector<double> rhos;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    Substream rng(7, Domain::Generic, i);
    const auto f = sample_uniform_correlation(rng, 2);
    const double rho = f.rho(0, 1);
    REQUIRE(rho > -1.0);
    REQUIRE(rho < 1.0);
    CHECK(f.factor(1, 1) == doctest::Approx(std::sqrt(1 - rho * rho)));
    rhos.push_back(rho);
  }
  const auto m = mean_se(rhos);
  CHECK(std::abs(m.mean) < 3 * std::sqrt(1.0 / 3 / rhos.size()));
  Substream rng(7, Domain::Generic, 0);
  try {
    sample_uniform_correlation(rng, 3);
    FAIL("expected an unsupported-dimension error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedDimension);
  }
}

TEST_CASE("single-step path gives the closed-form coupling variables") {
  // m = 1 and factor I: s = max(0, z), q = min(0, z), so za = 0 and zw = |z|.
  Eigen::MatrixXd inc(2, 1);
  inc << 0.8, -1.1;
  const auto pe = path_extremes(inc, Eigen::MatrixXd::Identity(2, 2));
  CHECK(pe.endpoint(0) == 0.8);
  CHECK(pe.sup(0) == 0.8);
  CHECK(pe.inf(0) == 0.0);
  CHECK(pe.sup(1) == 0.0);
  CHECK(pe.inf(1) == -1.1);

  CouplingSimulator sim({1, 1, 7, 2}, CorrelationFactor::identity(2));
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    Substream rng(3, Domain::Generic, rep);
    const auto z = sim.draw(rng);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(z.a(j, 0)) < 1e-15);
      CHECK(z.w(j, 0) == doctest::Approx(std::abs(z.r(j, 0))));
    }
  }
}

TEST_CASE("simulator matches path_extremes on the same increments") {
  for (double rho : {0.0, 0.6, -0.85}) {
    const auto factor = CorrelationFactor::cholesky(CorrelationFactor::bivariate(rho));
    const Eigen::MatrixXd finv = factor.factor.inverse();
    const int k = 4, m = 50;
    CouplingSimulator sim({k, m, 7, 2}, factor);
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      Substream a(5, Domain::Generic, rep), b(5, Domain::Generic, rep);
      const auto z = sim.draw(a);
      for (int i = 0; i < k; ++i) {
        Eigen::MatrixXd inc(2, m);
        for (int j = 0; j < m; ++j) {
          inc(0, j) = b.normal() / std::sqrt(double(m));
          inc(1, j) = b.normal() / std::sqrt(double(m));
        }
        const auto pe = path_extremes(inc, factor.factor);
        const Eigen::Vector2d zr = pe.endpoint;
        const Eigen::Vector2d za = finv * (pe.sup + pe.inf) - zr;
        const Eigen::Vector2d zw = finv * (pe.sup - pe.inf);
        CHECK((z.r.col(i) - zr).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((z.a.col(i) - za).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((z.w.col(i) - zw).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("coupling variables respect the range ordering") {
  const auto factor = CorrelationFactor::cholesky(CorrelationFactor::bivariate(0.7));
  CouplingSimulator sim({10, 100, 7, 2}, factor);
  CouplingSimulator plain({10, 100, 7, 2}, CorrelationFactor::identity(2));
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    Substream rng(1, Domain::Generic, rep);
    const auto z = sim.draw(rng);
    // In the observed frame F zr lies between the running extremes.
    const Eigen::MatrixXd obs_r = factor.factor * z.r;
    const Eigen::MatrixXd obs_w = factor.factor * z.w;
    const Eigen::MatrixXd obs_a = factor.factor * z.a;
    const Eigen::MatrixXd hi = (obs_a + obs_w + obs_r) / 2;
    const Eigen::MatrixXd lo = (obs_a - obs_w + obs_r) / 2;
    CHECK(obs_w.minCoeff() >= 0.0);
    CHECK((hi - obs_r.cwiseMax(0.0)).minCoeff() >= -1e-12);
    CHECK((lo - obs_r.cwiseMin(0.0)).maxCoeff() <= 1e-12);

    Substream rng2(1, Domain::Generic, rep);
    const auto zi = plain.draw(rng2);
    CHECK(zi.w.minCoeff() >= 0.0);
    CHECK((zi.w - zi.r.cwiseAbs()).minCoeff() >= -1e-12);
  }
}

TEST_CASE("coupling matrix on worked values") {
  TripleBlock<double> z;
  z.r.resize(2, 1);
  z.r << 1, 2;
  z.a = z.w = Eigen::MatrixXd::Zero(2, 1);
  Eigen::Matrix2d expect;
  expect << 1, 2, 2, 4;
  CHECK(build_U(z, WeightVector::return_only(), 1).isApprox(expect));

  z.r.setZero();
  CHECK(build_U(z, *published_weights(10), 1).isZero(0.0));
  CHECK_THROWS_AS(build_U(z, WeightVector::return_only(), 2), Error);
}

TEST_CASE("return-only coupling matrix has identity mean and Wishart spread") {
  // zr ~ N(0, I): E U = I and Var(U11) = 2/k, Var(U12) = 1/k.
  const int k = 5, reps = 40000;
  const auto factor = CorrelationFactor::cholesky(CorrelationFactor::bivariate(0.7));
  std::vector<double> u11, u12, u22;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    const auto s = simulate_coupling_block({k, 2, 11, 2}, factor, rep);
    const auto U = build_U(s, WeightVector::return_only(), k);
    u11.push_back(U(0, 0));
    u12.push_back(U(0, 1));
    u22.push_back(U(1, 1));
  }
  const auto a = mean_se(u11), b = mean_se(u12), c = mean_se(u22);
  CHECK(std::abs(a.mean - 1) < 3 * a.se);
  CHECK(std::abs(b.mean) < 3 * b.se);
  CHECK(std::abs(c.mean - 1) < 3 * c.se);
  const double var11 = a.se * a.se * reps, var12 = b.se * b.se * reps;
  CHECK(var11 == doctest::Approx(2.0 / k).epsilon(0.05));
  CHECK(var12 == doctest::Approx(1.0 / k).epsilon(0.05));
  // Frobenius risk is (N^2 + N)/k = 6/k.
  CHECK(var11 * 2 + var12 * 2 == doctest::Approx(6.0 / k).epsilon(0.05));
}

TEST_CASE("squared range of Brownian motion has mean 4 log 2") {
  // Discrete extremes underestimate the range at rate m^{-1/2}; two nested
  // grids give the Richardson estimate 2 E_{4m} - E_m.
  const int m = 2500, paths = 20000;
  const double oracle = 4 * std::log(2.0);
  std::vector<double> rich, fine_only;
  Eigen::MatrixXd fine(2, 4 * m), coarse(2, m);
  const auto id = Eigen::MatrixXd::Identity(2, 2);
  for (std::uint64_t p = 0; p < paths; ++p) {
    Substream rng(13, Domain::Generic, p);
    for (Eigen::Index j = 0; j < fine.size(); ++j) fine.data()[j] = rng.normal() / std::sqrt(4.0 * m);
    for (int j = 0; j < m; ++j) coarse.col(j) = fine.middleCols(4 * j, 4).rowwise().sum();
    const auto ef = path_extremes(fine, id);
    const auto ec = path_extremes(coarse, id);
    for (int a = 0; a < 2; ++a) {
      REQUIRE(ef.sup(a) >= ec.sup(a) - 1e-12);
      REQUIRE(ef.inf(a) <= ec.inf(a) + 1e-12);
      const double wf = ef.sup(a) - ef.inf(a), wc = ec.sup(a) - ec.inf(a);
      rich.push_back(2 * wf * wf - wc * wc);
      fine_only.push_back(wf * wf);
    }
  }
  const auto r = mean_se(rich);
  const auto f = mean_se(fine_only);
  MESSAGE("Richardson " << r.mean << " +- " << r.se << ", fine grid " << f.mean << ", oracle "
                        << oracle);
  CHECK(std::abs(r.mean - oracle) < 3 * r.se);
  CHECK(f.mean < oracle);
}

TEST_CASE("simulation is reproducible and independent of the thread count") {
  const auto factor = CorrelationFactor::cholesky(CorrelationFactor::bivariate(0.3));
  const auto a = simulate_coupling_block({10, 100, 7, 2}, factor, 42);
  const auto b = simulate_coupling_block({10, 100, 7, 2}, factor, 42);
  const auto c = simulate_coupling_block({10, 100, 7, 2}, factor, 43);
  CHECK(a.zeta.r == b.zeta.r);
  CHECK(a.zeta.w == b.zeta.w);
  CHECK(a.zeta.r != c.zeta.r);

  const std::vector<double> grid{-0.5, 0.0, 0.5};
  const CrossMomentConfig cfg{1000, 50, 7};
  RiskConfig rc{1000, 50, 7};
  set_thread_count(1);
  const auto one = cross_moment_curve(grid, cfg);
  const auto r1 = asymptotic_risk(*published_weights(10), 0.4, 10, rc);
  set_thread_count(3);
  const auto three = cross_moment_curve(grid, cfg);
  const auto r3 = asymptotic_risk(*published_weights(10), 0.4, 10, rc);
  set_thread_count(1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(one[i].rho_r == three[i].rho_r);
    CHECK(one[i].rho_a == three[i].rho_a);
    CHECK(one[i].rho_w == three[i].rho_w);
  }
  CHECK(r1.mean == r3.mean);
  CHECK(r1.se == r3.se);
}

TEST_CASE("cross-moment curve") {
  const std::vector<double> grid{-0.8, 0.0, 0.8};
  const auto rows = cross_moment_curve(grid, {20000, 100, 7});
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(std::abs(row.rho_r - row.rho) < 3 * row.se_r);
    CHECK(row.samples == 20000);
  }
  CHECK(std::abs(rows[1].rho_w) < 3 * rows[1].se_w);
  CHECK(std::abs(rows[1].rho_a) < 3 * rows[1].se_a);
  // Ranges are positively related whatever the sign of rho.
  CHECK(rows[0].rho_w > 0.2);
  CHECK(rows[2].rho_w > 0.2);
  CHECK(rows[0].rho_w < 0.8);
  // a carries the sign of rho.
  CHECK(rows[0].rho_a < 0);
  CHECK(rows[2].rho_a > 0);
}
