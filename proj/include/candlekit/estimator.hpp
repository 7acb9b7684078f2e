#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "candlekit/candles.hpp"
#include "candlekit/error.hpp"

namespace candlekit {

enum class WeightProvenance { Published, Calibrated, Manual };

std::string_view to_string(WeightProvenance p) noexcept;

/// Weights on the r r', a a' and w w' quadratic forms.
struct WeightVector {
  double lambda1 = 1;
  double lambda2 = 0;
  double lambda3 = 0;
  int k = 0;  // window size the weights were calibrated for; 0 if generic
  WeightProvenance provenance = WeightProvenance::Manual;

  Eigen::Vector3d as_vector() const { return {lambda1, lambda2, lambda3}; }
  std::array<double, 3> as_array() const { return {lambda1, lambda2, lambda3}; }
  bool finite() const noexcept {
    return std::isfinite(lambda1) && std::isfinite(lambda2) && std::isfinite(lambda3);
  }
  // Nonnegative weights give a positive semi-definite estimate.
  bool induces_psd() const noexcept { return lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0; }

  static WeightVector return_only(int k = 0) {
    return {1, 0, 0, k, WeightProvenance::Manual};
  }
  static WeightVector manual(double l1, double l2, double l3, int k = 0) {
    return {l1, l2, l3, k, WeightProvenance::Manual};
  }
};

/// Published optimal weights for k in {5, 10, 20}.
std::optional<WeightVector> published_weights(int k);

template <typename Scalar = double>
struct SpotCovEstimate {
  Matrix<Scalar> c_hat;
  double t_anchor = 0;
  int k = 0;
  WeightVector weights;
};

template <typename Scalar = double>
struct BetaEstimate {
  Scalar beta_hat{};
  Scalar nu_hat{};
  Scalar sigma2_hat{};
  double t_anchor = 0;
  int k = 0;
};

/// (1/k) sum_i {l1 r_i r_i' + l2 a_i a_i' + l3 w_i w_i'} for N x k inputs,
/// returned as (M + M')/2. Shared by the estimator and the coupling matrix.
template <typename DerivedR, typename DerivedA, typename DerivedW>
Matrix<typename DerivedR::Scalar> weighted_outer_average(const Eigen::MatrixBase<DerivedR>& r,
                                                         const Eigen::MatrixBase<DerivedA>& a,
                                                         const Eigen::MatrixBase<DerivedW>& w,
                                                         const WeightVector& weights) {
  using Scalar = typename DerivedR::Scalar;
  const Eigen::Index k = r.cols();
  if (k < 1) fail(ErrorKind::Validation, "empty block");
  if (a.rows() != r.rows() || w.rows() != r.rows() || a.cols() != k || w.cols() != k) {
    fail(ErrorKind::Validation, "block components differ in shape");
  }
  Matrix<Scalar> m = Scalar(weights.lambda1) * (r * r.transpose());
  m.noalias() += Scalar(weights.lambda2) * (a * a.transpose());
  m.noalias() += Scalar(weights.lambda3) * (w * w.transpose());
  m /= Scalar(k);
  return (m + m.transpose()) / Scalar(2);
}

template <typename Scalar>
SpotCovEstimate<Scalar> estimate_spot_cov(const TripleBlock<Scalar>& block,
                                          const WeightVector& weights, double t_anchor = 0) {
  if (block.size() < 1) fail(ErrorKind::Validation, "empty block");
  if (!weights.finite()) fail(ErrorKind::Validation, "non-finite weights");
  if (!block.r.allFinite() || !block.a.allFinite() || !block.w.allFinite()) {
    fail(ErrorKind::Validation, "non-finite candlestick variables in block");
  }
  return {weighted_outer_average(block.r, block.a, block.w, weights), t_anchor,
          static_cast<int>(block.size()), weights};
}

template <typename Scalar>
SpotCovEstimate<Scalar> return_only_cov(const TripleBlock<Scalar>& block, double t_anchor = 0) {
  return estimate_spot_cov(block, WeightVector::return_only(static_cast<int>(block.size())),
                           t_anchor);
}

/// beta = c12 / c11 with market variance c11 and residual variance
/// c22 - c12^2 / c11. Throws DegenerateMarket when c11 <= 0.
template <typename Scalar>
BetaEstimate<Scalar> spot_beta(const SpotCovEstimate<Scalar>& est) {
  const auto& c = est.c_hat;
  if (c.rows() != 2 || c.cols() != 2) {
    fail(ErrorKind::UnsupportedDimension, "spot beta needs a 2x2 covariance estimate");
  }
  const Scalar c11 = c(0, 0);
  if (!(c11 > Scalar(0))) fail(ErrorKind::DegenerateMarket, "market variance estimate is not positive");
  BetaEstimate<Scalar> out;
  out.beta_hat = c(0, 1) / c11;
  out.nu_hat = c11;
  out.sigma2_hat = c(1, 1) - c(0, 1) * c(0, 1) / c11;
  out.t_anchor = est.t_anchor;
  out.k = est.k;
  return out;
}

}  // namespace candlekit
