#pragma once

#include "dscrd/covariance.hpp"
#include "dscrd/joint_gaussian.hpp"
#include "dscrd/rate_distortion.hpp"

#include <optional>

namespace dscrd {

inline constexpr double kSchemeMargin = 1e-10;
inline constexpr double kNuAsymmetryTol = 1e-10;

// Gaussian test channel u = U C T + nu.
struct SchemeSpec {
  Matrix U;              // rows are eigenvectors of Sigma_x|side - Sigma_x|T,side
  Vector eigenvalues;    // ascending
  Matrix C;              // regression coefficient of x on T given side
  CovarianceMatrix nu_cov;
  double nu_asymmetry = 0.0;  // relative asymmetry of the coding-noise formula before symmetrization
  RdContext ctx;
  CovarianceMatrix D;
};

// Requires a Strict target. Default eigenbasis convention: eigenvalues
// ascending, each eigenvector's largest-magnitude component positive. A
// caller-provided basis must be orthogonal and diagonalize the gap matrix.
SchemeSpec design_scheme(const RdContext& ctx, const CovarianceMatrix& D,
                         const std::optional<Matrix>& basis = std::nullopt);

// I(T; u | side) in bits.
double achieved_rate(const SchemeSpec& spec);

// Sigma_{x | u, side}.
CovarianceMatrix achieved_distortion(const SchemeSpec& spec);

// ctx.joint extended with the block "u".
JointGaussian scheme_joint(const SchemeSpec& spec);

}  // namespace dscrd
