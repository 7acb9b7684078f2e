#include "candlekit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "candlekit/parallel.hpp"

namespace candlekit {

std::string_view to_string(TestMethod m) noexcept {
  return m == TestMethod::Candlestick ? "candlestick" : "return";
}

TestMethod parse_test_method(std::string_view s) {
  if (s == "candlestick") return TestMethod::Candlestick;
  if (s == "return") return TestMethod::Return;
  fail(ErrorKind::Validation, "unknown test method '" + std::string(s) + "'");
}

namespace {

void check_k(int k) {
  if (k < 2) {
    fail(ErrorKind::Validation,
         "inference needs k >= 2 (got k = " + std::to_string(k) + ")");
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Validation, "alpha must lie in (0, 1)");
}

std::size_t window_length(std::size_t m, double alpha) {
  check_alpha(alpha);
  const double exact = (1.0 - alpha) * static_cast<double>(m);
  return static_cast<std::size_t>(std::ceil(exact - 1e-9));
}

}  // namespace

double test_statistic(const BetaEstimate<double>& est, double beta0, int k) {
  check_k(k);
  if (!(est.nu_hat > 0)) fail(ErrorKind::DegenerateMarket, "market variance estimate is not positive");
  if (!(est.sigma2_hat > 0)) {
    fail(ErrorKind::DegenerateResidual, "residual variance estimate is not positive");
  }
  return std::sqrt(k - 1.0) * (est.beta_hat - beta0) / std::sqrt(est.sigma2_hat / est.nu_hat);
}

double null_statistic(const Eigen::Matrix2d& U, int k) {
  const double det = U(0, 0) * U(1, 1) - U(0, 1) * U(0, 1);
  if (!(U(0, 0) > 0) || !(det > 0) || !std::isfinite(det)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::sqrt(k - 1.0) * U(0, 1) / std::sqrt(det);
}

NullSample simulate_null_T(const TestConfig& cfg) {
  check_k(cfg.k);
  if (cfg.mc_reps < 1) fail(ErrorKind::Validation, "mc_reps must be positive");
  const WeightVector weights = cfg.effective_weights();
  if (!weights.finite()) fail(ErrorKind::Validation, "non-finite weights");

  const auto reps = static_cast<std::size_t>(cfg.mc_reps);
  const std::size_t chunks = chunk_count(reps);
  std::vector<std::vector<double>> partial(chunks);
  const CorrelationFactor factor = CorrelationFactor::identity(2);
  parallel_for(chunks, [&](std::size_t c) {
    CouplingSimulator sim({cfg.k, cfg.m, cfg.seed, 2}, factor);
    TripleBlock<double> zeta;
    const std::size_t end = std::min(reps, (c + 1) * kChunk);
    partial[c].reserve(end - c * kChunk);
    for (std::size_t rep = c * kChunk; rep < end; ++rep) {
      Substream rng(cfg.seed, Domain::NullStatistic, rep);
      sim.draw(rng, zeta);
      const Eigen::Matrix2d U = build_U(zeta, weights, cfg.k);
      partial[c].push_back(null_statistic(U, cfg.k));
    }
  });

  NullSample out;
  out.sorted.reserve(reps);
  for (const auto& p : partial) {
    for (const double t : p) {
      if (std::isnan(t)) {
        ++out.discarded;
      } else {
        out.sorted.push_back(t);
      }
    }
  }
  if (static_cast<double>(out.discarded) > kMaxDiscardedShare * static_cast<double>(reps)) {
    fail(ErrorKind::SingularDraws, std::to_string(out.discarded) + " of " + std::to_string(reps) +
                                       " null draws had a singular coupling matrix");
  }
  std::sort(out.sorted.begin(), out.sorted.end());
  return out;
}

std::pair<double, double> hdi_interval(std::span<const double> sorted, double alpha) {
  const std::size_t m = sorted.size();
  const std::size_t w = window_length(m, alpha);
  if (w < 2 || w > m) {
    fail(ErrorKind::Validation, "sample of size " + std::to_string(m) + " too small for alpha");
  }
  std::size_t best = 0;
  double best_width = sorted[w - 1] - sorted[0];
  for (std::size_t j = 1; j + w <= m; ++j) {
    const double width = sorted[j + w - 1] - sorted[j];
    if (width < best_width) {
      best_width = width;
      best = j;
    }
  }
  return {sorted[best], sorted[best + w - 1]};
}

std::pair<double, double> equal_tailed_interval(std::span<const double> sorted, double alpha) {
  const std::size_t m = sorted.size();
  const std::size_t w = window_length(m, alpha);
  if (w < 2 || w > m) {
    fail(ErrorKind::Validation, "sample of size " + std::to_string(m) + " too small for alpha");
  }
  // Central window holding the same number of order statistics as the HDI.
  const std::size_t j = (m - w) / 2;
  return {sorted[j], sorted[j + w - 1]};
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::Validation, "quantile level must lie in (0, 1)");
  if (!(dof > 0)) fail(ErrorKind::Validation, "degrees of freedom must be positive");
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

double student_t_cdf(double x, double dof) {
  if (!(dof > 0)) fail(ErrorKind::Validation, "degrees of freedom must be positive");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(dof), x);
}

CriticalValues student_t_critical_values(int k, double alpha) {
  check_k(k);
  check_alpha(alpha);
  const double q = student_t_quantile(1.0 - alpha / 2.0, k - 1.0);
  CriticalValues cv;
  cv.b_minus = -q;
  cv.b_plus = q;
  cv.k = k;
  cv.alpha = alpha;
  cv.method = TestMethod::Return;
  return cv;
}

CriticalValues simulated_critical_values(const TestConfig& cfg) {
  check_alpha(cfg.alpha);
  if (cfg.mc_reps < 100) {
    fail(ErrorKind::Validation,
         "critical values need at least 100 replications (got " + std::to_string(cfg.mc_reps) +
             ")");
  }
  const NullSample sample = simulate_null_T(cfg);
  const auto [lo, hi] = hdi_interval(sample.sorted, cfg.alpha);
  if (!(lo < hi)) fail(ErrorKind::SingularDraws, "degenerate simulated null distribution");
  CriticalValues cv;
  cv.b_minus = lo;
  cv.b_plus = hi;
  cv.k = cfg.k;
  cv.alpha = cfg.alpha;
  cv.method = cfg.method;
  cv.lambda = cfg.effective_weights().as_array();
  cv.mc_reps = cfg.mc_reps;
  cv.m = cfg.m;
  cv.seed = cfg.seed;
  cv.discarded = sample.discarded;
  return cv;
}

CriticalValues critical_values(const TestConfig& cfg) {
  if (cfg.method == TestMethod::Return) return student_t_critical_values(cfg.k, cfg.alpha);
  return simulated_critical_values(cfg);
}

void check_critical_values(const TestConfig& cfg, const CriticalValues& cv) {
  if (cv.k != cfg.k) {
    fail(ErrorKind::ArtifactMismatch, "critical values were computed for k = " +
                                          std::to_string(cv.k) + ", test uses k = " +
                                          std::to_string(cfg.k));
  }
  if (std::abs(cv.alpha - cfg.alpha) > 1e-12) {
    fail(ErrorKind::ArtifactMismatch, "critical values were computed for alpha = " +
                                          std::to_string(cv.alpha));
  }
  if (cv.method != cfg.method) {
    fail(ErrorKind::ArtifactMismatch, "critical values were computed for the " +
                                          std::string(to_string(cv.method)) + " method");
  }
  if (cfg.method == TestMethod::Candlestick) {
    const auto want = cfg.weights.as_array();
    for (int i = 0; i < 3; ++i) {
      if (std::abs(want[i] - cv.lambda[i]) > 1e-12) {
        fail(ErrorKind::ArtifactMismatch, "critical values were computed for different weights");
      }
    }
  }
  if (!(cv.b_minus < cv.b_plus)) fail(ErrorKind::Validation, "critical values need b_minus < b_plus");
}

bool rejects(double t_stat, const CriticalValues& cv) noexcept {
  return t_stat <= cv.b_minus || t_stat >= cv.b_plus;
}

TestResult run_beta_test(const TripleBlock<double>& block, const TestConfig& cfg,
                         const CriticalValues& cv, double t_anchor) {
  check_k(cfg.k);
  if (block.size() != cfg.k) {
    fail(ErrorKind::Validation, "block holds " + std::to_string(block.size()) +
                                    " intervals, test uses k = " + std::to_string(cfg.k));
  }
  check_critical_values(cfg, cv);
  const auto est = spot_beta(estimate_spot_cov(block, cfg.effective_weights(), t_anchor));
  TestResult out;
  out.t_stat = test_statistic(est, 0.0, cfg.k);
  out.critical_values = cv;
  out.reject = rejects(out.t_stat, cv);
  out.beta_hat = est.beta_hat;
  out.nu_hat = est.nu_hat;
  out.sigma2_hat = est.sigma2_hat;
  out.t_anchor = t_anchor;
  return out;
}

namespace {

// Kolmogorov survival function Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_test_student_t(std::span<const double> sorted, double dof) {
  const std::size_t n = sorted.size();
  if (n < 1) fail(ErrorKind::Validation, "empty sample");
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = student_t_cdf(sorted[i], dof);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(static_cast<double>(n));
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace candlekit
