#include "dscrd/rate_distortion.hpp"

#include "dscrd/errors.hpp"

#include <cmath>
#include <sstream>

namespace dscrd {

namespace {

bool dominated(LoewnerOrder o) {
  return o == LoewnerOrder::Less || o == LoewnerOrder::LessOrEqual || o == LoewnerOrder::Equal;
}

}  // namespace

RdContext build_context(const CovarianceMatrix& source_cov, const LinearObservation& statistic,
                        const std::optional<LinearObservation>& side, double loewner_tol) {
  const Eigen::Index n = source_cov.dim();
  if (!source_cov.full_rank()) throw ModelError("source covariance is not full rank");
  if (statistic.source_dim() != n) throw ModelError("statistic does not observe the source dimension");
  if (side && side->source_dim() != n) throw ModelError("side observation does not observe the source dimension");

  std::vector<LinearObservation> obs{LinearObservation(statistic.mixing, statistic.noise_cov, "T")};
  if (side) obs.emplace_back(side->mixing, side->noise_cov, "side");
  JointGaussian joint = assemble_joint(source_cov, obs);

  std::vector<std::string> side_set;
  if (side) side_set.push_back("side");
  auto stat_side = side_set;
  stat_side.insert(stat_side.begin(), "T");

  CovarianceMatrix cond_side = side ? condition(joint, "x", side_set) : source_cov;
  CovarianceMatrix cond_stat_side = condition(joint, "x", stat_side);
  CovarianceMatrix stat_cond_side = condition(joint, "T", side_set);

  // Conditioning never increases the error covariance.
  const double tol = 1e-9;
  if (!dominated(loewner_cmp(cond_stat_side.matrix(), cond_side.matrix(), tol)) ||
      !dominated(loewner_cmp(cond_side.matrix(), source_cov.matrix(), tol)))
    throw ModelError("build_context: conditional covariances violate the conditioning order");

  return RdContext{source_cov,
                   statistic,
                   side,
                   std::move(joint),
                   std::move(cond_side),
                   std::move(cond_stat_side),
                   std::move(stat_cond_side),
                   loewner_tol};
}

const char* to_string(Validity v) {
  switch (v) {
    case Validity::Strict: return "strict";
    case Validity::ZeroRateBoundary: return "zero_rate_boundary";
    case Validity::Infeasible: return "infeasible";
  }
  return "?";
}

std::string DistortionTarget::violation() const {
  if (validity != Validity::Infeasible) return {};
  std::string out;
  if (vs_floor != LoewnerOrder::Less)
    out = std::string("lower bound violated: Sigma_x|T,side must be strictly below D (Sigma_x|T,side vs D: ") +
          to_string(vs_floor) + ")";
  if (vs_ceiling != LoewnerOrder::Less && vs_ceiling != LoewnerOrder::Equal) {
    if (!out.empty()) out += "; ";
    // less_or_equal here means D meets Sigma_x|side in some directions only.
    out += std::string("upper bound violated: D must be strictly below or equal to Sigma_x|side (D vs Sigma_x|side: ") +
           to_string(vs_ceiling) + ")";
  }
  return out;
}

DistortionTarget classify(const RdContext& ctx, const CovarianceMatrix& D) {
  if (D.dim() != ctx.dim()) throw ModelError("classify: distortion dimension does not match the source");
  DistortionTarget t{D};
  t.vs_floor = loewner_cmp(ctx.cond_stat_side.matrix(), D.matrix(), ctx.loewner_tol);
  t.vs_ceiling = loewner_cmp(D.matrix(), ctx.cond_side.matrix(), ctx.loewner_tol);
  if (t.vs_ceiling == LoewnerOrder::Equal)
    t.validity = Validity::ZeroRateBoundary;
  else if (t.vs_floor == LoewnerOrder::Less && t.vs_ceiling == LoewnerOrder::Less)
    t.validity = Validity::Strict;
  else
    t.validity = Validity::Infeasible;
  return t;
}

double rd_rate(const RdContext& ctx, const CovarianceMatrix& D) {
  const auto target = classify(ctx, D);
  if (target.validity == Validity::Infeasible) throw InfeasibleTargetError("infeasible distortion: " + target.violation());
  if (target.validity == Validity::ZeroRateBoundary) return 0.0;
  const Matrix& floor = ctx.cond_stat_side.matrix();
  const double ld_gap = spd_logdet(ctx.cond_side.matrix() - floor, "Sigma_x|side - Sigma_x|T,side");
  const double ld_excess = spd_logdet(D.matrix() - floor, "D - Sigma_x|T,side");
  if (ld_excess < std::log(1e-300))
    throw InfeasibleTargetError("|D - Sigma_x|T,side| is below 1e-300: D sits on the lower boundary");
  return nats_to_bits(0.5 * (ld_gap - ld_excess));
}

CovarianceMatrix distortion_family(const RdContext& ctx, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream os;
    os << "distortion_family: alpha must lie in (0, 1], got " << alpha;
    throw ModelError(os.str());
  }
  const Matrix D = (1.0 - alpha) * ctx.cond_stat_side.matrix() + alpha * ctx.cond_side.matrix();
  return CovarianceMatrix::symmetrized(D, "distortion", ctx.cond_side.norm());
}

double baseline_rate_no_side(const RdContext& ctx, const CovarianceMatrix& D) {
  if (!ctx.has_side()) return rd_rate(ctx, D);
  const RdContext bare = build_context(ctx.source_cov, ctx.statistic, std::nullopt, ctx.loewner_tol);
  return rd_rate(bare, D);
}

namespace {

// Inverse of a negative definite matrix.
Matrix nd_inverse(const Matrix& m, const std::string& what) { return -spd_inverse(-m, what); }

}  // namespace

AppendixResult appendix_c_matrix(const CovarianceMatrix& source_cov, const LinearObservation& obs_T,
                                 const LinearObservation& obs_side) {
  const Eigen::Index n = source_cov.dim();
  for (const auto* o : {&obs_T, &obs_side}) {
    if (!o->square() || o->source_dim() != n)
      throw ModelError(o->label + ": factor-chain route needs a square mixing over the source");
    const double rc = rcond_general(o->mixing);
    if (!(rc > kMixingRcondFloor))
      throw SingularMatrixError(o->label + ": mixing matrix is not invertible", rc);
  }

  AppendixResult r;

  // Route (a): direct regression of x on (T, side).
  const JointGaussian joint = assemble_joint(source_cov, {LinearObservation(obs_T.mixing, obs_T.noise_cov, "T"),
                                                          LinearObservation(obs_side.mixing, obs_side.noise_cov, "side")});
  r.C = regress(joint, "x", {"T", "side"}).coefficients.at(0);

  // Route (b): the closed-form factor chain.
  const Matrix& Sx = source_cov.matrix();
  const Matrix& A = obs_T.mixing;
  const Matrix& B = obs_side.mixing;
  const Matrix signal_y = A * Sx * A.transpose();
  const Matrix Sy = signal_y + obs_T.noise_cov.matrix();
  const Matrix Sz = B * Sx * B.transpose() + obs_side.noise_cov.matrix();
  const Matrix Syz = A * Sx * B.transpose();
  const Matrix Sy_inv = spd_inverse(Sy, "factor Sigma_y");

  auto& f = r.factors;
  f.H_inv = Sy_inv - spd_inverse(signal_y, "factor H (A Sigma_x A^T)");
  f.Delta = Syz.transpose() * (-f.H_inv) * Syz + obs_side.noise_cov.matrix();
  const Matrix delta_direct = Sz - Syz.transpose() * Sy_inv * Syz;
  r.delta_identity_gap = max_abs(f.Delta - delta_direct) / std::max(max_abs(delta_direct), 1e-300);

  const Matrix K = Syz.transpose() * f.H_inv * Syz;
  f.P_inv = nd_inverse(K, "factor P (Syz^T H^-1 Syz)") -
            nd_inverse(K - obs_side.noise_cov.matrix(), "factor P (Syz^T H^-1 Syz - Sigma_n2)");
  f.C_times_Sigma_y = Sx * A.transpose() * f.H_inv * Syz * f.P_inv * Syz.transpose();
  r.C_chain = f.C_times_Sigma_y * Sy_inv;

  r.route_gap = max_abs(r.C - r.C_chain) / std::max(max_abs(r.C), 1e-300);
  r.det = r.C.determinant();
  r.rcond = rcond_general(r.C);
  if (!(r.route_gap <= kAppendixRouteTol)) {
    std::ostringstream os;
    os << "appendix_c_matrix: regression and factor-chain routes disagree (relative gap " << r.route_gap << ")";
    throw Error(os.str());
  }
  return r;
}

}  // namespace dscrd
