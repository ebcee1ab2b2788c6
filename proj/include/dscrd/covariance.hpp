#pragma once

#include <Eigen/Dense>

#include <string>

namespace dscrd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kRcondFloor = 1e-12;

// Symmetric positive semidefinite matrix. Construction checks symmetry
// (relative to the largest absolute entry) and the smallest eigenvalue, then
// stores the exact symmetrization (M + M^T)/2.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;
  explicit CovarianceMatrix(const Matrix& m, const std::string& name = "covariance");

  // Skips the asymmetry check; used where a computed product is known to be
  // symmetric only up to rounding and the caller has already measured it.
  // The PSD and rank tests use max(norm, scale) so that results which are
  // pure rounding noise around zero (e.g. self-conditioning) are accepted.
  static CovarianceMatrix symmetrized(const Matrix& m, const std::string& name = "covariance", double scale = 0.0);
  static CovarianceMatrix identity(Eigen::Index dim);
  static CovarianceMatrix zero(Eigen::Index dim);
  static CovarianceMatrix scaled_identity(Eigen::Index dim, double s);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }  // NOLINT(google-explicit-constructor)

  double min_eigenvalue() const { return min_eig_; }
  // Spectral norm, which for a PSD matrix is its largest eigenvalue.
  double norm() const { return norm_; }
  bool full_rank() const { return full_rank_; }

 private:
  struct Unchecked {};
  CovarianceMatrix(Matrix m, const std::string& name, double scale, Unchecked);
  void classify_spectrum(const std::string& name, double scale);

  Matrix m_;
  double min_eig_ = 0.0;
  double norm_ = 0.0;
  bool full_rank_ = false;
};

// Relative asymmetry max|M - M^T| / max|M| (0 for the zero matrix).
double asymmetry(const Matrix& m);

double max_abs(const Matrix& m);

// Cholesky-based helpers on SPD matrices. Each one checks the reciprocal
// condition number against kRcondFloor and throws SingularMatrixError below it.
Matrix spd_inverse(const Matrix& m, const std::string& what);
Matrix spd_solve(const Matrix& m, const Matrix& rhs, const std::string& what);
double spd_logdet(const Matrix& m, const std::string& what);
double spd_rcond(const Matrix& m);

// Reciprocal condition number in the 2-norm, from singular values.
double rcond_general(const Matrix& m);

}  // namespace dscrd
