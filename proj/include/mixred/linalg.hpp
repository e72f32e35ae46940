#pragma once

#include <Eigen/Dense>

namespace mixred {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute tolerance for accepting a covariance as symmetric.
inline constexpr double kSymmetryTolerance = 1e-10;

Matrix symmetrized(const Matrix& a);

/// Cholesky factor of a symmetric positive definite matrix with its
/// log-determinant cached.
///
/// Construction symmetrizes the input and attempts a Cholesky
/// decomposition; if that fails a single diagonal jitter of
/// 1e-10 * tr(A) / d is added and the decomposition retried. A second
/// failure raises NotPositiveDefinite.
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix& a);

  int dim() const { return static_cast<int>(lower_.rows()); }
  const Matrix& lower() const { return lower_; }
  double log_det() const { return log_det_; }
  /// The matrix actually factored (after symmetrization and any jitter).
  const Matrix& matrix() const { return matrix_; }
  bool jittered() const { return jittered_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;
  /// v^T A^{-1} v
  double inverse_quadratic(const Vector& v) const;

 private:
  Matrix matrix_;
  Matrix lower_;
  double log_det_ = 0.0;
  bool jittered_ = false;
};

/// Principal square root of a symmetric positive semidefinite matrix via
/// eigen-decomposition. Eigenvalues below zero are clamped; eigenvalues more
/// negative than -1e-8 * max|eigenvalue| raise NotPositiveDefinite.
Matrix sqrtm_psd(const Matrix& a);

/// Inverse principal square root of an SPD matrix.
Matrix inv_sqrtm_spd(const Matrix& a);

/// log N(x | mean, cov) with cov given by its factor.
double log_normal_pdf(const Vector& x, const Vector& mean, const SpdFactor& cov);

}  // namespace mixred
