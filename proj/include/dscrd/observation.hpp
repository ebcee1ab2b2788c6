#pragma once

#include "dscrd/covariance.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dscrd {

// y = mixing * x + n with n ~ N(0, noise_cov) independent of x.
struct LinearObservation {
  LinearObservation(Matrix mixing, CovarianceMatrix noise_cov, std::string label);

  Eigen::Index obs_dim() const { return mixing.rows(); }
  Eigen::Index source_dim() const { return mixing.cols(); }
  bool square() const { return mixing.rows() == mixing.cols(); }

  Matrix mixing;
  CovarianceMatrix noise_cov;
  std::string label;
};

// Decoded estimate x_hat = H x + eta whose error x - x_hat has covariance D.
struct BackwardChannel {
  Matrix H;
  CovarianceMatrix eta_cov;
  CovarianceMatrix D;
  std::string label;

  // The estimate as an observation of x; requires eta_cov full rank, which
  // holds for 0 < D < Sigma_x strictly.
  LinearObservation as_observation() const;
};

// Sufficient statistic sum_j A_j^T Sigma_j^{-1} y_j of independent
// observations, returned as its effective observation model.
LinearObservation fuse(const std::vector<LinearObservation>& observations);

// H = (Sigma_x - D) Sigma_x^{-1}, Sigma_eta = (Sigma_x - D) Sigma_x^{-1} D.
// Requires 0 < D <= Sigma_x in the Loewner order.
BackwardChannel backward_channel(const CovarianceMatrix& source_cov, const CovarianceMatrix& D,
                                 const std::string& label = "xhat", double loewner_tol = kPsdTol);

// Node statistic T_j = A_j^T Sigma_j^{-1} y_j + sum_i D_i^{-1} xhat_i.
LinearObservation node_statistic(const LinearObservation& own, const std::vector<BackwardChannel>& children,
                                 const CovarianceMatrix& source_cov, const std::string& label = "T");

// Weights W such that T_j = W_own y_j + sum_i W_i xhat_i, in that order.
std::vector<Matrix> node_statistic_weights(const LinearObservation& own, const std::vector<BackwardChannel>& children);

// Max-norm gap between Sigma_{x | raw, side} and Sigma_{x | T, side} where
// T = sum_j weights[j] * raw[j]. The supplied statistic must match the
// effective model implied by the weights.
double verify_sufficiency(const CovarianceMatrix& source_cov, const std::vector<LinearObservation>& raw,
                          const std::vector<Matrix>& weights, const LinearObservation& statistic,
                          const std::optional<LinearObservation>& side = std::nullopt);

}  // namespace dscrd
