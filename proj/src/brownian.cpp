#include "candlekit/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "candlekit/parallel.hpp"

namespace candlekit {

namespace {

void check_correlation(const Eigen::MatrixXd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1) {
    fail(ErrorKind::Validation, "correlation matrix must be square");
  }
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    if (std::abs(rho(i, i) - 1.0) > 1e-12) {
      fail(ErrorKind::Validation, "correlation matrix needs a unit diagonal");
    }
  }
  if ((rho - rho.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    fail(ErrorKind::Validation, "correlation matrix must be symmetric");
  }
}

// Extremes of factor * W over the grid points of one interval. The path
// starts at 0, which counts towards both extremes.
void scan_extremes(const double* increments, Eigen::Index n, Eigen::Index m, const double* factor,
                   double* w, double* sup, double* inf) {
  for (Eigen::Index d = 0; d < n; ++d) {
    w[d] = 0.0;
    sup[d] = 0.0;
    inf[d] = 0.0;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const double* dz = increments + j * n;
    for (Eigen::Index d = 0; d < n; ++d) w[d] += dz[d];
    for (Eigen::Index i = 0; i < n; ++i) {
      double y = 0.0;
      for (Eigen::Index d = 0; d < n; ++d) y += factor[i + d * n] * w[d];
      sup[i] = std::max(sup[i], y);
      inf[i] = std::min(inf[i], y);
    }
  }
}

}  // namespace

Eigen::MatrixXd CorrelationFactor::bivariate(double rho) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, rho, rho, 1.0;
  return m;
}

CorrelationFactor CorrelationFactor::cholesky(const Eigen::MatrixXd& rho) {
  check_correlation(rho);
  Eigen::LLT<Eigen::MatrixXd> llt(rho);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::SingularFactor, "correlation matrix is not positive definite");
  }
  return {rho, llt.matrixL()};
}

CorrelationFactor CorrelationFactor::symmetric(const Eigen::MatrixXd& rho) {
  check_correlation(rho);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0) {
    fail(ErrorKind::SingularFactor, "correlation matrix is not positive definite");
  }
  return {rho, eig.operatorSqrt()};
}

CorrelationFactor CorrelationFactor::identity(Eigen::Index n) {
  return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n)};
}

CorrelationFactor sample_uniform_correlation(Substream& rng, int n_assets) {
  if (n_assets != 2) {
    fail(ErrorKind::UnsupportedDimension,
         "uniform correlation sampling is implemented for N = 2 only (got N = " +
             std::to_string(n_assets) + ")");
  }
  const double rho = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd factor(2, 2);
  factor << 1.0, 0.0, rho, std::sqrt(1.0 - rho * rho);
  return {CorrelationFactor::bivariate(rho), factor};
}

PathExtremes path_extremes(const Eigen::Ref<const Eigen::MatrixXd>& increments,
                           const Eigen::MatrixXd& factor) {
  const Eigen::Index n = increments.rows();
  if (factor.rows() != n || factor.cols() != n) {
    fail(ErrorKind::Validation, "factor and increments differ in dimension");
  }
  const Eigen::MatrixXd inc = increments;  // contiguous column-major copy
  PathExtremes out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  scan_extremes(inc.data(), n, inc.cols(), factor.data(), out.endpoint.data(), out.sup.data(),
                out.inf.data());
  return out;
}

CouplingSimulator::CouplingSimulator(const PathConfig& cfg, const CorrelationFactor& factor)
    : cfg_(cfg), factor_(factor.factor) {
  if (cfg.k < 1) fail(ErrorKind::Validation, "window size k must be positive");
  if (cfg.m < 1) fail(ErrorKind::Validation, "sub-step count m must be positive");
  if (factor_.rows() != cfg.n_assets || factor_.cols() != cfg.n_assets) {
    fail(ErrorKind::Validation, "factor dimension does not match the asset count");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(factor_);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14) {
    fail(ErrorKind::SingularFactor, "correlation factor is singular");
  }
  factor_inverse_ = lu.inverse();
  increments_.resize(cfg.n_assets, cfg.m);
}

void CouplingSimulator::draw(Substream& rng, TripleBlock<double>& zeta) {
  const Eigen::Index n = cfg_.n_assets;
  const Eigen::Index m = cfg_.m;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  zeta.r.resize(n, cfg_.k);
  zeta.a.resize(n, cfg_.k);
  zeta.w.resize(n, cfg_.k);

  if (n == 2) {
    // Bivariate fast path: draw and scan in one pass.
    const double f00 = factor_(0, 0), f01 = factor_(0, 1), f10 = factor_(1, 0), f11 = factor_(1, 1);
    const Eigen::Matrix2d inv = factor_inverse_;
    for (int i = 0; i < cfg_.k; ++i) {
      double w0 = 0, w1 = 0, s0 = 0, s1 = 0, q0 = 0, q1 = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        w0 += scale * rng.normal();
        w1 += scale * rng.normal();
        const double y0 = f00 * w0 + f01 * w1;
        const double y1 = f10 * w0 + f11 * w1;
        s0 = std::max(s0, y0);
        q0 = std::min(q0, y0);
        s1 = std::max(s1, y1);
        q1 = std::min(q1, y1);
      }
      const Eigen::Vector2d s = inv * Eigen::Vector2d(s0, s1);
      const Eigen::Vector2d q = inv * Eigen::Vector2d(q0, q1);
      const Eigen::Vector2d endpoint(w0, w1);
      zeta.r.col(i) = endpoint;
      zeta.a.col(i) = s + q - endpoint;
      zeta.w.col(i) = s - q;
    }
    return;
  }

  Eigen::VectorXd endpoint(n), sup(n), inf(n);
  double* inc = increments_.data();
  for (int i = 0; i < cfg_.k; ++i) {
    for (Eigen::Index j = 0; j < n * m; ++j) inc[j] = scale * rng.normal();
    scan_extremes(inc, n, m, factor_.data(), endpoint.data(), sup.data(), inf.data());
    const Eigen::VectorXd s = factor_inverse_ * sup;
    const Eigen::VectorXd q = factor_inverse_ * inf;
    zeta.r.col(i) = endpoint;
    zeta.a.col(i) = s + q - endpoint;
    zeta.w.col(i) = s - q;
  }
}

TripleBlock<double> CouplingSimulator::draw(Substream& rng) {
  TripleBlock<double> zeta;
  draw(rng, zeta);
  return zeta;
}

CouplingSample simulate_coupling_block(const PathConfig& cfg, const CorrelationFactor& factor,
                                       std::uint64_t replication) {
  CouplingSimulator sim(cfg, factor);
  Substream rng(cfg.seed, Domain::Generic, replication);
  return {sim.draw(rng), {}};
}

Eigen::MatrixXd build_U(const TripleBlock<double>& zeta, const WeightVector& weights, int k) {
  if (zeta.size() != k) {
    fail(ErrorKind::Validation, "coupling block holds " + std::to_string(zeta.size()) +
                                    " intervals, expected k = " + std::to_string(k));
  }
  return weighted_outer_average(zeta.r, zeta.a, zeta.w, weights);
}

Eigen::MatrixXd build_U(const CouplingSample& sample, const WeightVector& weights, int k) {
  return build_U(sample.zeta, weights, k);
}

namespace {

struct PairMoments {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;

  void add(double x, double y) {
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  void merge(const PairMoments& o) {
    n += o.n;
    sx += o.sx;
    sy += o.sy;
    sxx += o.sxx;
    syy += o.syy;
    sxy += o.sxy;
  }
  double correlation() const {
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    return cov / std::sqrt(vx * vy);
  }
};

}  // namespace

std::vector<CrossMomentRow> cross_moment_curve(std::span<const double> rho_grid,
                                               const CrossMomentConfig& cfg) {
  if (cfg.samples < 4) fail(ErrorKind::Validation, "cross moments need at least 4 samples");
  std::vector<CrossMomentRow> rows;
  rows.reserve(rho_grid.size());
  for (std::size_t g = 0; g < rho_grid.size(); ++g) {
    const double rho = rho_grid[g];
    if (!(rho > -1.0 && rho < 1.0)) fail(ErrorKind::Validation, "grid point outside (-1, 1)");
    const auto factor = CorrelationFactor::cholesky(CorrelationFactor::bivariate(rho));
    const auto n = static_cast<std::size_t>(cfg.samples);
    const std::size_t chunks = chunk_count(n);
    std::vector<std::array<PairMoments, 3>> partial(chunks);
    parallel_for(chunks, [&](std::size_t c) {
      Eigen::MatrixXd inc(2, cfg.m);
      const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
      const std::size_t end = std::min(n, (c + 1) * kChunk);
      for (std::size_t s = c * kChunk; s < end; ++s) {
        Substream rng(cfg.seed, Domain::CrossMoment, (static_cast<std::uint64_t>(g) << 40) | s);
        for (Eigen::Index j = 0; j < inc.size(); ++j) inc.data()[j] = scale * rng.normal();
        const PathExtremes ex = path_extremes(inc, factor.factor);
        // Observed-frame candlestick of the correlated pair.
        const Eigen::Vector2d r = factor.factor * ex.endpoint;
        const Eigen::Vector2d a = ex.sup + ex.inf - r;
        const Eigen::Vector2d w = ex.sup - ex.inf;
        partial[c][0].add(r(0), r(1));
        partial[c][1].add(a(0), a(1));
        partial[c][2].add(w(0), w(1));
      }
    });
    std::array<PairMoments, 3> total{};
    for (const auto& p : partial) {
      for (int v = 0; v < 3; ++v) total[v].merge(p[v]);
    }
    CrossMomentRow row;
    row.rho = rho;
    row.samples = cfg.samples;
    row.rho_r = total[0].correlation();
    row.rho_a = total[1].correlation();
    row.rho_w = total[2].correlation();
    // Large-sample standard error of a Pearson correlation.
    const double sn = std::sqrt(static_cast<double>(cfg.samples));
    row.se_r = (1 - row.rho_r * row.rho_r) / sn;
    row.se_a = (1 - row.rho_a * row.rho_a) / sn;
    row.se_w = (1 - row.rho_w * row.rho_w) / sn;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace candlekit
