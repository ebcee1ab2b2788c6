#include "dscrd/coding_scheme.hpp"

#include "dscrd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace dscrd {

namespace {

void canonicalize_signs(Matrix& V) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index arg = 0;
    V.col(c).cwiseAbs().maxCoeff(&arg);
    if (V(arg, c) < 0.0) V.col(c) = -V.col(c);
  }
}

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

SchemeSpec design_scheme(const RdContext& ctx, const CovarianceMatrix& D, const std::optional<Matrix>& basis) {
  const auto target = classify(ctx, D);
  if (target.validity == Validity::ZeroRateBoundary)
    throw InfeasibleTargetError("design_scheme: D equals Sigma_x|side, the rate is zero and no scheme is needed");
  if (target.validity == Validity::Infeasible)
    throw InfeasibleTargetError("design_scheme: infeasible distortion: " + target.violation());

  const Matrix& ceil = ctx.cond_side.matrix();
  const Matrix& floor = ctx.cond_stat_side.matrix();
  const Matrix gap = ceil - floor;        // P
  const Matrix slack = ceil - D.matrix();   // Q
  const Matrix excess = D.matrix() - floor;  // R
  const double scale = ctx.cond_side.norm();
  const double q_min = min_eig(slack), r_min = min_eig(excess);
  if (!(q_min > kSchemeMargin * scale) || !(r_min > kSchemeMargin * scale)) {
    std::ostringstream os;
    os << "design_scheme: D is within the strictness margin of a bound (min eig of Sigma_x|side - D = " << q_min
       << ", of D - Sigma_x|T,side = " << r_min << ")";
    throw InfeasibleTargetError(os.str());
  }

  SchemeSpec s{Matrix(), Vector(), Matrix(), CovarianceMatrix(), 0.0, ctx, D};
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gap + gap.transpose()));
  if (basis) {
    const Matrix& U = *basis;
    const Eigen::Index n = ctx.dim();
    if (U.rows() != n || U.cols() != n) throw ModelError("design_scheme: basis has the wrong shape");
    if (max_abs(U.transpose() * U - Matrix::Identity(n, n)) > 1e-12)
      throw ModelError("design_scheme: basis is not orthogonal");
    Matrix L = U * gap * U.transpose();
    Vector diag = L.diagonal();
    L.diagonal().setZero();
    if (max_abs(L) > 1e-10 * std::max(max_abs(gap), 1e-300))
      throw ModelError("design_scheme: basis does not diagonalize Sigma_x|side - Sigma_x|T,side");
    s.U = U;
    s.eigenvalues = diag;
  } else {
    Matrix V = es.eigenvectors();
    canonicalize_signs(V);
    s.U = V.transpose();
    s.eigenvalues = es.eigenvalues();
  }

  std::vector<std::string> given{"T"};
  if (ctx.has_side()) given.push_back("side");
  s.C = regress(ctx.joint, "x", given).coefficients.at(0);

  const Matrix nu = s.U * gap * spd_solve(slack, excess, "Sigma_x|side - D") * s.U.transpose();
  s.nu_asymmetry = asymmetry(nu);
  if (s.nu_asymmetry > kNuAsymmetryTol) {
    std::ostringstream os;
    os << "design_scheme: coding-noise covariance is asymmetric (" << s.nu_asymmetry << ")";
    throw Error(os.str());
  }
  s.nu_cov = CovarianceMatrix::symmetrized(nu, "coding-noise covariance");
  if (!s.nu_cov.full_rank()) throw Error("design_scheme: coding-noise covariance is not positive definite");
  return s;
}

double achieved_rate(const SchemeSpec& spec) {
  const Matrix UC = spec.U * spec.C;
  const Matrix u_given_side = UC * spec.ctx.stat_cond_side.matrix() * UC.transpose() + spec.nu_cov.matrix();
  const double ld_outer = spd_logdet(0.5 * (u_given_side + u_given_side.transpose()), "Sigma_u|side");
  const double ld_inner = spd_logdet(spec.nu_cov.matrix(), "Sigma_u|T,side");
  return nats_to_bits(0.5 * (ld_outer - ld_inner));
}

JointGaussian scheme_joint(const SchemeSpec& spec) {
  return spec.ctx.joint.append_linear("u", {{"T", spec.U * spec.C}}, spec.nu_cov.matrix());
}

CovarianceMatrix achieved_distortion(const SchemeSpec& spec) {
  std::vector<std::string> given{"u"};
  if (spec.ctx.has_side()) given.push_back("side");
  return condition(scheme_joint(spec), "x", given);
}

}  // namespace dscrd
