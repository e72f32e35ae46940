#pragma once

#include "mixred/linalg.hpp"

namespace mixred {

/// Multivariate normal density N(mean, cov). Immutable; the covariance is
/// validated (square, symmetric within 1e-10, positive definite) and its
/// Cholesky factor cached on construction.
class Gaussian {
 public:
  Gaussian(Vector mean, const Matrix& cov);

  static Gaussian univariate(double mean, double variance);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return factor_.matrix(); }
  const SpdFactor& factor() const { return factor_; }
  double log_det() const { return factor_.log_det(); }

 private:
  Vector mean_;
  SpdFactor factor_;
};

double log_density(const Gaussian& g, const Vector& x);
double density(const Gaussian& g, const Vector& x);

/// log N(a.mean | b.mean, a.cov + b.cov), the log of the overlap integral
/// of two Gaussian densities. Symmetric in its arguments bit for bit.
double log_overlap(const Gaussian& a, const Gaussian& b);

// Divergences between single Gaussians. All require equal dimensions and
// throw DimensionMismatch otherwise.

/// KL(g1 || g2).
double kl(const Gaussian& g1, const Gaussian& g2);
/// Integrated squared error  \int (g1 - g2)^2.
double ise(const Gaussian& g1, const Gaussian& g2);
/// Cauchy-Schwarz divergence  -log( \int g1 g2 / sqrt(\int g1^2 \int g2^2) ).
double cs(const Gaussian& g1, const Gaussian& g2);
/// Squared 2-Wasserstein distance.
double w2_squared(const Gaussian& g1, const Gaussian& g2);
/// E_{src}[ log dst(X) ].
double expected_log_density(const Gaussian& src, const Gaussian& dst);

struct GaussianProduct {
  double log_norm_const;
  Gaussian gaussian;

  double norm_const() const;
};

/// N(x | mu1, S1) N(x | mu2, S2) = C N(x | mu3, S3).
GaussianProduct product(const Gaussian& g1, const Gaussian& g2);

/// N(x | A mu + b, S) N(mu | prior) = C N(mu | posterior) as a function of
/// mu, with C = N(x | A mu0 + b, S + A S0 A^T).
GaussianProduct product_affine(const Matrix& a, const Vector& b, const Matrix& cov,
                               const Gaussian& prior, const Vector& x);

/// \int N(x | A mu + b, S) N(mu | prior) dmu as a density in x, i.e.
/// N(x | A mu0 + b, S + A S0 A^T).
Gaussian marginalize_affine(const Matrix& a, const Vector& b, const Matrix& cov,
                            const Gaussian& prior);

void require_same_dim(const Gaussian& a, const Gaussian& b, const char* what);

}  // namespace mixred
