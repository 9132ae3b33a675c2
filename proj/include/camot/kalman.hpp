#pragma once

#include <Eigen/Dense>

#include "camot/errors.hpp"

namespace camot::kf {

/// Linear predict step: mean <- F mean, cov <- F cov Fᵀ + Q.
template <typename Vec, typename Mat>
void predict(Vec& mean, Mat& cov, const Mat& F, const Mat& Q) {
  mean = F * mean;
  cov = F * cov * F.transpose() + Q;
  cov = 0.5 * (cov + cov.transpose()).eval();
}

/// Standard Kalman correction with the Joseph-form covariance update, which
/// keeps the covariance symmetric PSD for any gain.
template <typename Vec, typename Cov, typename ObsMat, typename ObsCov, typename Obs>
void update(Vec& mean, Cov& cov, const ObsMat& H, const ObsCov& R, const Obs& z) {
  const auto S = (H * cov * H.transpose() + R).eval();
  Eigen::LLT<ObsCov> llt(S);
  if (llt.info() != Eigen::Success) {
    throw numerical_failure_error("kalman update: innovation covariance is not PSD");
  }
  const auto K = llt.solve(H * cov).transpose().eval(); // P Hᵀ S⁻¹
  mean += K * (z - H * mean);
  const Cov ikh = Cov::Identity(cov.rows(), cov.cols()) - K * H;
  cov = ikh * cov * ikh.transpose() + K * R * K.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
}

} // namespace camot::kf
