#include "dscrd/covariance.hpp"

#include "dscrd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dscrd {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double asymmetry(const Matrix& m) {
  const double scale = max_abs(m);
  if (scale == 0.0) return 0.0;
  return max_abs(m - m.transpose()) / scale;
}

CovarianceMatrix::CovarianceMatrix(const Matrix& m, const std::string& name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << name << ": covariance must be square and non-empty, got " << m.rows() << "x" << m.cols();
    throw ModelError(os.str());
  }
  if (!m.allFinite()) throw ModelError(name + ": covariance has non-finite entries");
  const double asym = asymmetry(m);
  if (asym > kSymmetryTol) {
    std::ostringstream os;
    os << name << ": covariance is not symmetric (relative asymmetry " << asym << ")";
    throw ModelError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
  classify_spectrum(name, 0.0);
}

CovarianceMatrix::CovarianceMatrix(Matrix m, const std::string& name, double scale, Unchecked) : m_(std::move(m)) {
  classify_spectrum(name, scale);
}

CovarianceMatrix CovarianceMatrix::symmetrized(const Matrix& m, const std::string& name, double scale) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ModelError(name + ": covariance must be square and non-empty");
  if (!m.allFinite()) throw ModelError(name + ": covariance has non-finite entries");
  return CovarianceMatrix(Matrix(0.5 * (m + m.transpose())), name, scale, Unchecked{});
}

CovarianceMatrix CovarianceMatrix::identity(Eigen::Index dim) { return CovarianceMatrix(Matrix::Identity(dim, dim)); }

CovarianceMatrix CovarianceMatrix::zero(Eigen::Index dim) { return CovarianceMatrix(Matrix::Zero(dim, dim)); }

CovarianceMatrix CovarianceMatrix::scaled_identity(Eigen::Index dim, double s) {
  return CovarianceMatrix(Matrix(s * Matrix::Identity(dim, dim)));
}

void CovarianceMatrix::classify_spectrum(const std::string& name, double scale) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  min_eig_ = ev.minCoeff();
  norm_ = ev.cwiseAbs().maxCoeff();
  const double ref = std::max(norm_, scale);
  if (min_eig_ < -kPsdTol * ref) {
    std::ostringstream os;
    os.precision(17);
    os << name << ": covariance is not positive semidefinite (smallest eigenvalue " << min_eig_ << ", norm " << norm_
       << ")";
    throw ModelError(os.str());
  }
  full_rank_ = min_eig_ > kPsdTol * ref;
}

namespace {

Eigen::LLT<Matrix> checked_llt(const Matrix& m, const std::string& what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw SingularMatrixError(what + ": matrix is not positive definite", 0.0);
  const double rc = llt.rcond();
  if (!(rc >= kRcondFloor)) throw SingularMatrixError(what + ": matrix is numerically singular", rc);
  return llt;
}

}  // namespace

double spd_rcond(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  return llt.rcond();
}

Matrix spd_inverse(const Matrix& m, const std::string& what) {
  const auto llt = checked_llt(m, what);
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Matrix spd_solve(const Matrix& m, const Matrix& rhs, const std::string& what) {
  return checked_llt(m, what).solve(rhs);
}

double spd_logdet(const Matrix& m, const std::string& what) {
  const auto llt = checked_llt(m, what);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double rcond_general(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  if (smax == 0.0) return 0.0;
  return s(s.size() - 1) / smax;
}

}  // namespace dscrd
