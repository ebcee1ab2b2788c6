#include "dscrd/joint_gaussian.hpp"

#include "dscrd/errors.hpp"
#include "dscrd/observation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace dscrd {

JointGaussian::JointGaussian(std::vector<Block> blocks, CovarianceMatrix joint_cov)
    : blocks_(std::move(blocks)), cov_(std::move(joint_cov)) {
  Eigen::Index off = 0;
  for (const auto& b : blocks_) {
    if (b.dim <= 0) throw ModelError("block '" + b.name + "' has non-positive dimension");
    if (!offsets_.emplace(b.name, std::make_pair(off, b.dim)).second)
      throw ModelError("duplicate block name '" + b.name + "'");
    off += b.dim;
  }
  if (off != cov_.dim()) throw ModelError("block dimensions do not sum to the joint dimension");
}

Eigen::Index JointGaussian::block_dim(const std::string& name) const {
  auto it = offsets_.find(name);
  if (it == offsets_.end()) throw ModelError("unknown block '" + name + "'");
  return it->second.second;
}

std::vector<Eigen::Index> JointGaussian::indices(const std::vector<std::string>& names) const {
  std::vector<Eigen::Index> idx;
  for (const auto& n : names) {
    auto it = offsets_.find(n);
    if (it == offsets_.end()) throw ModelError("unknown block '" + n + "'");
    for (Eigen::Index k = 0; k < it->second.second; ++k) idx.push_back(it->second.first + k);
  }
  return idx;
}

Matrix JointGaussian::cross(const std::vector<std::string>& rows, const std::vector<std::string>& cols) const {
  const auto ri = indices(rows);
  const auto ci = indices(cols);
  return cov_.matrix()(ri, ci);
}

JointGaussian JointGaussian::append_linear(const std::string& name,
                                           const std::vector<std::pair<std::string, Matrix>>& terms,
                                           const std::optional<Matrix>& noise_cov) const {
  if (terms.empty() && !noise_cov) throw ModelError("append_linear: block '" + name + "' has no terms");
  const Eigen::Index n = dim();
  const Eigen::Index d = terms.empty() ? noise_cov->rows() : terms.front().second.rows();
  // K maps the full joint vector onto the new block.
  Matrix K = Matrix::Zero(d, n);
  for (const auto& [block, coeff] : terms) {
    auto it = offsets_.find(block);
    if (it == offsets_.end()) throw ModelError("append_linear: unknown block '" + block + "'");
    if (coeff.rows() != d || coeff.cols() != it->second.second)
      throw ModelError("append_linear: coefficient for '" + block + "' has wrong shape");
    K.middleCols(it->second.first, it->second.second) += coeff;
  }
  Matrix out(n + d, n + d);
  const Matrix& S = cov_.matrix();
  out.topLeftCorner(n, n) = S;
  const Matrix KS = K * S;
  out.bottomLeftCorner(d, n) = KS;
  out.topRightCorner(n, d) = KS.transpose();
  Matrix zz = KS * K.transpose();
  if (noise_cov) {
    if (noise_cov->rows() != d || noise_cov->cols() != d)
      throw ModelError("append_linear: noise covariance for '" + name + "' has wrong shape");
    zz += *noise_cov;
  }
  out.bottomRightCorner(d, d) = 0.5 * (zz + zz.transpose());
  auto blocks = blocks_;
  blocks.push_back({name, d});
  return JointGaussian(std::move(blocks), CovarianceMatrix::symmetrized(out, "joint covariance"));
}

JointGaussian assemble_joint(const CovarianceMatrix& source_cov, const std::vector<LinearObservation>& observations,
                             const NoiseCross& noise_cross) {
  const Eigen::Index n = source_cov.dim();
  std::vector<Block> blocks{{"x", n}};
  std::vector<Eigen::Index> off;
  Eigen::Index total = n;
  for (const auto& o : observations) {
    if (o.source_dim() != n)
      throw ModelError("observation '" + o.label + "': mixing has " + std::to_string(o.source_dim()) +
                       " columns, source dimension is " + std::to_string(n));
    blocks.push_back({o.label, o.obs_dim()});
    off.push_back(total);
    total += o.obs_dim();
  }
  const Matrix& Sx = source_cov.matrix();
  Matrix J = Matrix::Zero(total, total);
  J.topLeftCorner(n, n) = Sx;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& Ai = observations[i].mixing;
    const Eigen::Index oi = off[i], di = Ai.rows();
    J.block(0, oi, n, di) = Sx * Ai.transpose();
    J.block(oi, 0, di, n) = Ai * Sx;
    for (std::size_t j = 0; j < observations.size(); ++j) {
      const auto& Aj = observations[j].mixing;
      J.block(oi, off[j], di, Aj.rows()) = Ai * Sx * Aj.transpose();
    }
    J.block(oi, oi, di, di) += observations[i].noise_cov.matrix();
  }
  for (const auto& [key, c] : noise_cross) {
    const auto [i, j] = key;
    if (i >= observations.size() || j >= observations.size() || i == j)
      throw ModelError("noise cross-covariance refers to an invalid observation pair");
    if (c.rows() != observations[i].obs_dim() || c.cols() != observations[j].obs_dim())
      throw ModelError("noise cross-covariance between '" + observations[i].label + "' and '" +
                       observations[j].label + "' has wrong shape");
    J.block(off[i], off[j], c.rows(), c.cols()) += c;
    J.block(off[j], off[i], c.cols(), c.rows()) += c.transpose();
  }
  // Rounding in the products above is the only source of asymmetry.
  return JointGaussian(std::move(blocks), CovarianceMatrix::symmetrized(J, "joint covariance"));
}

namespace {

void check_given(const JointGaussian& joint, const std::string& target, const std::vector<std::string>& given) {
  std::set<std::string> seen;
  for (const auto& g : given) {
    if (!joint.has(g)) throw ModelError("unknown block '" + g + "'");
    if (!seen.insert(g).second) throw ModelError("block '" + g + "' listed twice in conditioning set");
  }
  if (!joint.has(target)) throw ModelError("unknown block '" + target + "'");
}

}  // namespace

RegressionResult regress(const JointGaussian& joint, const std::string& target, const std::vector<std::string>& given) {
  check_given(joint, target, given);
  const Matrix St = joint.cov(target);
  const double scale = max_abs(St);
  if (given.empty()) return {{}, CovarianceMatrix::symmetrized(St, "conditional covariance", scale)};
  const Matrix Sg = joint.cross(given, given);
  const Matrix Sgt = joint.cross(given, {target});
  // B = S_tg S_g^{-1}, obtained from S_g B^T = S_gt.
  const Matrix Bt = spd_solve(Sg, Sgt, "conditioning covariance of {" + [&] {
    std::string s;
    for (const auto& g : given) s += (s.empty() ? "" : ", ") + g;
    return s;
  }() + "}");
  const Matrix B = Bt.transpose();
  const Matrix E = St - B * Sgt;
  RegressionResult r{{}, CovarianceMatrix::symmetrized(E, "conditional covariance of " + target, scale)};
  Eigen::Index col = 0;
  for (const auto& g : given) {
    const Eigen::Index d = joint.block_dim(g);
    r.coefficients.push_back(B.middleCols(col, d));
    col += d;
  }
  return r;
}

CovarianceMatrix condition(const JointGaussian& joint, const std::string& target,
                           const std::vector<std::string>& given) {
  if (std::find(given.begin(), given.end(), target) != given.end())
    throw ModelError("condition: target '" + target + "' is in the conditioning set");
  return regress(joint, target, given).error_cov;
}

const char* to_string(LoewnerOrder o) {
  switch (o) {
    case LoewnerOrder::Less: return "less";
    case LoewnerOrder::LessOrEqual: return "less_or_equal";
    case LoewnerOrder::Equal: return "equal";
    case LoewnerOrder::Incomparable: return "incomparable";
    case LoewnerOrder::GreaterOrEqual: return "greater_or_equal";
    case LoewnerOrder::Greater: return "greater";
  }
  return "?";
}

LoewnerOrder loewner_cmp(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw ModelError("loewner_cmp: operands must be square and of equal dimension");
  auto spectral = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  const double band = tol * std::max(spectral(a), spectral(b));
  const Matrix diff = b - a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo > band) return LoewnerOrder::Less;
  if (hi < -band) return LoewnerOrder::Greater;
  if (lo >= -band && hi <= band) return LoewnerOrder::Equal;
  if (lo >= -band) return LoewnerOrder::LessOrEqual;
  if (hi <= band) return LoewnerOrder::GreaterOrEqual;
  return LoewnerOrder::Incomparable;
}

double conditional_mi(const JointGaussian& joint, const std::string& a, const std::string& b,
                      const std::vector<std::string>& given) {
  if (a == b) throw ModelError("conditional_mi: blocks must differ");
  for (const auto& g : given)
    if (g == a || g == b) throw ModelError("conditional_mi: '" + g + "' is both measured and conditioned on");
  auto with_b = given;
  with_b.push_back(b);
  const CovarianceMatrix outer = condition(joint, a, given);
  const CovarianceMatrix inner = condition(joint, a, with_b);
  const double mi = 0.5 * (spd_logdet(outer.matrix(), "conditional covariance of " + a) -
                           spd_logdet(inner.matrix(), "conditional covariance of " + a + " given " + b));
  return std::max(mi, 0.0);
}

}  // namespace dscrd
