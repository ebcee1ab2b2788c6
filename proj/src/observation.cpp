#include "dscrd/observation.hpp"

#include "dscrd/errors.hpp"
#include "dscrd/joint_gaussian.hpp"

#include <sstream>

namespace dscrd {

LinearObservation::LinearObservation(Matrix mixing_, CovarianceMatrix noise_cov_, std::string label_)
    : mixing(std::move(mixing_)), noise_cov(std::move(noise_cov_)), label(std::move(label_)) {
  if (mixing.rows() == 0 || mixing.cols() == 0) throw ModelError(label + ": mixing matrix is empty");
  if (!mixing.allFinite()) throw ModelError(label + ": mixing matrix has non-finite entries");
  if (mixing.rows() != noise_cov.dim()) {
    std::ostringstream os;
    os << label << ": mixing has " << mixing.rows() << " rows but noise covariance is " << noise_cov.dim() << "x"
       << noise_cov.dim();
    throw ModelError(os.str());
  }
  if (!noise_cov.full_rank()) throw ModelError(label + ": noise covariance is not full rank");
}

LinearObservation BackwardChannel::as_observation() const { return LinearObservation(H, eta_cov, label); }

namespace {

// A^T Sigma^{-1}, via a Cholesky solve.
Matrix precision_weight(const LinearObservation& o) {
  return spd_solve(o.noise_cov.matrix(), o.mixing, o.label + " noise covariance").transpose();
}

}  // namespace

LinearObservation fuse(const std::vector<LinearObservation>& observations) {
  if (observations.empty()) throw ModelError("fuse: no observations");
  const Eigen::Index n = observations.front().source_dim();
  Matrix mixing = Matrix::Zero(n, n);
  Matrix noise = Matrix::Zero(n, n);
  std::string label;
  for (const auto& o : observations) {
    if (o.source_dim() != n) throw ModelError("fuse: observation '" + o.label + "' has a different source dimension");
    const Matrix W = precision_weight(o);
    mixing += W * o.mixing;
    noise += W * o.noise_cov.matrix() * W.transpose();
    label += (label.empty() ? "" : "+") + o.label;
  }
  const double scale = max_abs(mixing);
  return LinearObservation(mixing, CovarianceMatrix::symmetrized(noise, "fused noise covariance", scale),
                           "fuse(" + label + ")");
}

BackwardChannel backward_channel(const CovarianceMatrix& source_cov, const CovarianceMatrix& D,
                                 const std::string& label, double loewner_tol) {
  if (D.dim() != source_cov.dim()) throw ModelError(label + ": distortion and source dimensions differ");
  if (!D.full_rank()) throw ModelError(label + ": distortion matrix is singular");
  const auto order = loewner_cmp(D.matrix(), source_cov.matrix(), loewner_tol);
  if (order != LoewnerOrder::Less && order != LoewnerOrder::LessOrEqual && order != LoewnerOrder::Equal)
    throw ModelError(label + ": distortion is not dominated by the source covariance (D vs Sigma_x: " +
                     to_string(order) + ")");
  const Matrix& Sx = source_cov.matrix();
  const Matrix gap = Sx - D.matrix();
  // (Sx - D) Sx^{-1} = (Sx^{-1} (Sx - D))^T by symmetry of both factors.
  Matrix H = spd_solve(Sx, gap, "source covariance").transpose();
  Matrix eta = H * D.matrix();
  return BackwardChannel{std::move(H), CovarianceMatrix::symmetrized(eta, label + " eta covariance", D.norm()), D,
                         label};
}

std::vector<Matrix> node_statistic_weights(const LinearObservation& own, const std::vector<BackwardChannel>& children) {
  std::vector<Matrix> w{precision_weight(own)};
  for (const auto& c : children) w.push_back(spd_inverse(c.D.matrix(), c.label + " distortion"));
  return w;
}

LinearObservation node_statistic(const LinearObservation& own, const std::vector<BackwardChannel>& children,
                                 const CovarianceMatrix& source_cov, const std::string& label) {
  const Eigen::Index n = source_cov.dim();
  if (!own.square()) throw ModelError(own.label + ": node measurement mixing must be square");
  if (own.source_dim() != n) throw ModelError(own.label + ": mixing does not match the source dimension");
  const auto weights = node_statistic_weights(own, children);
  Matrix mixing = weights[0] * own.mixing;
  Matrix noise = weights[0] * own.noise_cov.matrix() * weights[0].transpose();
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto& c = children[i];
    if (c.H.rows() != n || c.H.cols() != n) throw ModelError(c.label + ": backward channel dimension mismatch");
    const auto order = loewner_cmp(c.D.matrix(), source_cov.matrix());
    if (order != LoewnerOrder::Less && order != LoewnerOrder::LessOrEqual && order != LoewnerOrder::Equal)
      throw ModelError(c.label + ": child distortion is not dominated by the source covariance");
    const Matrix& Wi = weights[i + 1];
    mixing += Wi * c.H;
    noise += Wi * c.eta_cov.matrix() * Wi.transpose();
  }
  return LinearObservation(mixing, CovarianceMatrix::symmetrized(noise, label + " noise covariance", max_abs(mixing)),
                           label);
}

double verify_sufficiency(const CovarianceMatrix& source_cov, const std::vector<LinearObservation>& raw,
                          const std::vector<Matrix>& weights, const LinearObservation& statistic,
                          const std::optional<LinearObservation>& side) {
  if (raw.empty()) throw ModelError("verify_sufficiency: no raw observations");
  if (weights.size() != raw.size()) throw ModelError("verify_sufficiency: one weight matrix per raw observation");
  const Eigen::Index d = statistic.obs_dim();
  const Eigen::Index n = source_cov.dim();
  Matrix implied_mixing = Matrix::Zero(d, n);
  Matrix implied_noise = Matrix::Zero(d, d);
  std::vector<LinearObservation> obs;
  std::vector<std::pair<std::string, Matrix>> terms;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const auto& W = weights[j];
    if (W.rows() != d || W.cols() != raw[j].obs_dim())
      throw ModelError("verify_sufficiency: weight " + std::to_string(j) + " does not map '" + raw[j].label +
                       "' onto the statistic");
    implied_mixing += W * raw[j].mixing;
    implied_noise += W * raw[j].noise_cov.matrix() * W.transpose();
    const std::string name = "raw" + std::to_string(j);
    obs.emplace_back(raw[j].mixing, raw[j].noise_cov, name);
    terms.emplace_back(name, W);
  }
  const double ms = std::max(max_abs(implied_mixing), 1e-300);
  const double ns = std::max(max_abs(implied_noise), 1e-300);
  if (statistic.source_dim() != n || max_abs(implied_mixing - statistic.mixing) > 1e-9 * ms ||
      max_abs(implied_noise - statistic.noise_cov.matrix()) > 1e-9 * ns)
    throw ModelError("verify_sufficiency: statistic is not the stated linear function of the raw observations");
  if (side) obs.emplace_back(side->mixing, side->noise_cov, "side");
  const JointGaussian joint = assemble_joint(source_cov, obs).append_linear("T", terms);

  std::vector<std::string> all_given;
  for (std::size_t j = 0; j < raw.size(); ++j) all_given.push_back("raw" + std::to_string(j));
  std::vector<std::string> stat_given{"T"};
  if (side) {
    all_given.push_back("side");
    stat_given.push_back("side");
  }
  const Matrix full = condition(joint, "x", all_given).matrix();
  const Matrix via_stat = condition(joint, "x", stat_given).matrix();
  return max_abs(full - via_stat);
}

}  // namespace dscrd
