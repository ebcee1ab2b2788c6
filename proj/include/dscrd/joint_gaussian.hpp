#pragma once

#include "dscrd/covariance.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dscrd {

struct LinearObservation;

struct Block {
  std::string name;
  Eigen::Index dim = 0;
};

// Zero-mean jointly Gaussian vector made of named blocks.
class JointGaussian {
 public:
  JointGaussian(std::vector<Block> blocks, CovarianceMatrix joint_cov);

  const std::vector<Block>& blocks() const { return blocks_; }
  const CovarianceMatrix& joint_cov() const { return cov_; }
  Eigen::Index dim() const { return cov_.dim(); }

  bool has(const std::string& name) const { return offsets_.count(name) != 0; }
  Eigen::Index block_dim(const std::string& name) const;
  // Sub-covariance between two block lists, in the given order.
  Matrix cross(const std::vector<std::string>& rows, const std::vector<std::string>& cols) const;
  Matrix cov(const std::string& name) const { return cross({name}, {name}); }

  // New block z = sum_b K_b * b + w with w independent of everything else.
  // An empty noise means w = 0.
  JointGaussian append_linear(const std::string& name, const std::vector<std::pair<std::string, Matrix>>& terms,
                              const std::optional<Matrix>& noise_cov = std::nullopt) const;

 private:
  std::vector<Eigen::Index> indices(const std::vector<std::string>& names) const;

  std::vector<Block> blocks_;
  CovarianceMatrix cov_;
  std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> offsets_;  // name -> (offset, dim)
};

struct RegressionResult {
  std::vector<Matrix> coefficients;  // one per conditioning block, in order
  CovarianceMatrix error_cov;
};

enum class LoewnerOrder { Less, LessOrEqual, Equal, Incomparable, GreaterOrEqual, Greater };

const char* to_string(LoewnerOrder o);

// Noise cross-covariances keyed by (i, j) observation indices with i < j;
// the entry is cov(n_i, n_j).
using NoiseCross = std::map<std::pair<std::size_t, std::size_t>, Matrix>;

// Joint law of (x, y_1, ..., y_m) for y_j = A_j x + n_j. The source block is
// named "x"; observation blocks take the observation labels.
JointGaussian assemble_joint(const CovarianceMatrix& source_cov, const std::vector<LinearObservation>& observations,
                             const NoiseCross& noise_cross = {});

CovarianceMatrix condition(const JointGaussian& joint, const std::string& target,
                           const std::vector<std::string>& given);

RegressionResult regress(const JointGaussian& joint, const std::string& target, const std::vector<std::string>& given);

// Classifies a against b from the spectrum of b - a, with band
// tol * max(|a|, |b|).
LoewnerOrder loewner_cmp(const Matrix& a, const Matrix& b, double tol = kPsdTol);

// I(a; b | given) in nats.
double conditional_mi(const JointGaussian& joint, const std::string& a, const std::string& b,
                      const std::vector<std::string>& given);

inline constexpr double kLn2 = 0.69314718055994530942;
inline double nats_to_bits(double nats) { return nats / kLn2; }

}  // namespace dscrd
