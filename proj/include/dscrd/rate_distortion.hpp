#pragma once

#include "dscrd/covariance.hpp"
#include "dscrd/joint_gaussian.hpp"
#include "dscrd/observation.hpp"

#include <optional>
#include <string>

namespace dscrd {

// Everything the rate formula needs for one hop: the source, the encoded
// statistic T, the decoder's side information and the conditional
// covariances derived from them. Blocks in `joint` are "x", "T" and, when
// present, "side".
struct RdContext {
  CovarianceMatrix source_cov;
  LinearObservation statistic;
  std::optional<LinearObservation> side;
  JointGaussian joint;
  CovarianceMatrix cond_side;       // Sigma_{x|side}; Sigma_x without side
  CovarianceMatrix cond_stat_side;  // Sigma_{x|T,side}
  CovarianceMatrix stat_cond_side;  // Sigma_{T|side}
  double loewner_tol = kPsdTol;

  bool has_side() const { return side.has_value(); }
  Eigen::Index dim() const { return source_cov.dim(); }
};

RdContext build_context(const CovarianceMatrix& source_cov, const LinearObservation& statistic,
                        const std::optional<LinearObservation>& side, double loewner_tol = kPsdTol);

enum class Validity { Strict, ZeroRateBoundary, Infeasible };

const char* to_string(Validity v);

struct DistortionTarget {
  CovarianceMatrix D;
  Validity validity = Validity::Infeasible;
  LoewnerOrder vs_floor = LoewnerOrder::Incomparable;    // floor vs D
  LoewnerOrder vs_ceiling = LoewnerOrder::Incomparable;  // D vs ceiling

  // Human-readable account of which bound is violated, empty when valid.
  std::string violation() const;
};

// Strict when Sigma_{x|T,side} < D < Sigma_{x|side}; ZeroRateBoundary when
// D equals Sigma_{x|side}; Infeasible otherwise.
DistortionTarget classify(const RdContext& ctx, const CovarianceMatrix& D);

// 1/2 log2(|Sigma_{x|side} - Sigma_{x|T,side}| / |D - Sigma_{x|T,side}|), in bits.
double rd_rate(const RdContext& ctx, const CovarianceMatrix& D);

// (1 - alpha) Sigma_{x|T,side} + alpha Sigma_{x|side}, alpha in (0, 1].
CovarianceMatrix distortion_family(const RdContext& ctx, double alpha);

// Same formula as rd_rate with the decoder side information dropped. Not
// part of the distributed setting; used for comparison only.
double baseline_rate_no_side(const RdContext& ctx, const CovarianceMatrix& D);

struct AppendixFactors {
  Matrix H_inv;            // (A Sx A^T + Sn1)^{-1} - (A Sx A^T)^{-1}
  Matrix Delta;            // Sigma_{z|y}
  Matrix P_inv;            // (K)^{-1} - (K - Sn2)^{-1}, K = Syz^T H^{-1} Syz
  Matrix C_times_Sigma_y;  // Sx A^T H^{-1} Syz P^{-1} Syz^T
};

struct AppendixResult {
  Matrix C;           // regression coefficient of x on T given the side observation
  Matrix C_chain;     // the same matrix through the closed-form factor chain
  AppendixFactors factors;
  double route_gap = 0.0;  // max|C - C_chain| / max|C|
  double delta_identity_gap = 0.0;
  double det = 0.0;
  double rcond = 0.0;
};

inline constexpr double kMixingRcondFloor = 1e-10;
inline constexpr double kAppendixRouteTol = 1e-8;

// Computes C two ways and throws if they disagree beyond kAppendixRouteTol.
AppendixResult appendix_c_matrix(const CovarianceMatrix& source_cov, const LinearObservation& obs_T,
                                 const LinearObservation& obs_side);

}  // namespace dscrd
