#include "mixred/linalg.hpp"

#include <cmath>
#include <numbers>

#include "mixred/errors.hpp"

namespace mixred {

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

namespace {

bool try_cholesky(const Matrix& a, Matrix& lower) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  for (int i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) return false;
  }
  return true;
}

}  // namespace

SpdFactor::SpdFactor(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionMismatch("SpdFactor: matrix must be square and non-empty");
  }
  if (!a.allFinite()) throw NotPositiveDefinite("SpdFactor: non-finite entries");
  matrix_ = symmetrized(a);
  if (!try_cholesky(matrix_, lower_)) {
    const double jitter = 1e-10 * matrix_.trace() / static_cast<double>(matrix_.rows());
    if (jitter > 0.0) {
      matrix_.diagonal().array() += jitter;
      jittered_ = true;
    }
    if (!(jitter > 0.0) || !try_cholesky(matrix_, lower_)) {
      throw NotPositiveDefinite("SpdFactor: matrix is not positive definite");
    }
  }
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

Vector SpdFactor::solve(const Vector& b) const {
  const auto l = lower_.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(b));
}

Matrix SpdFactor::solve(const Matrix& b) const {
  const auto l = lower_.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(b));
}

Matrix SpdFactor::inverse() const {
  return symmetrized(solve(Matrix(Matrix::Identity(dim(), dim()))));
}

double SpdFactor::inverse_quadratic(const Vector& v) const {
  const Vector z = lower_.triangularView<Eigen::Lower>().solve(v);
  return z.squaredNorm();
}

Matrix sqrtm_psd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
  if (eig.info() != Eigen::Success) throw NotPositiveDefinite("sqrtm: eigen-decomposition failed");
  Vector values = eig.eigenvalues();
  const double scale = values.cwiseAbs().maxCoeff();
  if (values.minCoeff() < -1e-8 * scale) {
    throw NotPositiveDefinite("sqrtm: matrix has a negative eigenvalue");
  }
  values = values.cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = eig.eigenvectors();
  return symmetrized(v * values.asDiagonal() * v.transpose());
}

Matrix inv_sqrtm_spd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw NotPositiveDefinite("inv_sqrtm: matrix is not positive definite");
  }
  const Vector values = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  const Matrix& v = eig.eigenvectors();
  return symmetrized(v * values.asDiagonal() * v.transpose());
}

double log_normal_pdf(const Vector& x, const Vector& mean, const SpdFactor& cov) {
  const double d = static_cast<double>(mean.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + cov.log_det() +
                 cov.inverse_quadratic(x - mean));
}

}  // namespace mixred
