#include "mixred/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mixred/errors.hpp"

namespace mixred {

namespace {

const Matrix& checked_cov(const Vector& mean, const Matrix& cov) {
  if (mean.size() == 0) throw ValidationError("Gaussian: empty mean");
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw DimensionMismatch("Gaussian: covariance shape does not match mean length");
  }
  if (!mean.allFinite() || !cov.allFinite()) throw ValidationError("Gaussian: non-finite parameter");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw ValidationError("Gaussian: covariance is not symmetric");
  }
  return cov;
}

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

}  // namespace

Gaussian::Gaussian(Vector mean, const Matrix& cov)
    : mean_(std::move(mean)), factor_(checked_cov(mean_, cov)) {}

Gaussian Gaussian::univariate(double mean, double variance) {
  return Gaussian(Vector::Constant(1, mean), Matrix::Constant(1, 1, variance));
}

void require_same_dim(const Gaussian& a, const Gaussian& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()) + ")");
  }
}

double log_density(const Gaussian& g, const Vector& x) {
  if (x.size() != g.dim()) throw DimensionMismatch("log_density: point has wrong dimension");
  return log_normal_pdf(x, g.mean(), g.factor());
}

double density(const Gaussian& g, const Vector& x) { return std::exp(log_density(g, x)); }

double log_overlap(const Gaussian& a, const Gaussian& b) {
  require_same_dim(a, b, "log_overlap");
  const SpdFactor sum(a.cov() + b.cov());
  return log_normal_pdf(a.mean(), b.mean(), sum);
}

double kl(const Gaussian& g1, const Gaussian& g2) {
  require_same_dim(g1, g2, "kl");
  const auto& f2 = g2.factor();
  const double trace_term = f2.solve(g1.cov()).trace();
  const double quad = f2.inverse_quadratic(g2.mean() - g1.mean());
  const double value =
      0.5 * (f2.log_det() - g1.log_det() + trace_term + quad - static_cast<double>(g1.dim()));
  return std::max(0.0, value);
}

double ise(const Gaussian& g1, const Gaussian& g2) {
  require_same_dim(g1, g2, "ise");
  const double d = static_cast<double>(g1.dim());
  const double self = std::exp(-0.5 * d * std::log(4.0 * std::numbers::pi)) *
                      (std::exp(-0.5 * g1.log_det()) + std::exp(-0.5 * g2.log_det()));
  const double value = self - 2.0 * std::exp(log_overlap(g1, g2));
  return std::max(0.0, value);
}

double cs(const Gaussian& g1, const Gaussian& g2) {
  require_same_dim(g1, g2, "cs");
  const double d = static_cast<double>(g1.dim());
  const double log4pi = std::log(4.0 * std::numbers::pi);
  const double self = (d * log4pi + g1.log_det()) + (d * log4pi + g2.log_det());
  const double value = -log_overlap(g1, g2) - 0.25 * self;
  return std::max(0.0, value);
}

double w2_squared(const Gaussian& g1, const Gaussian& g2) {
  require_same_dim(g1, g2, "w2_squared");
  const double mean_term = (g1.mean() - g2.mean()).squaredNorm();
  const Matrix root2 = sqrtm_psd(g2.cov());
  const Matrix cross = sqrtm_psd(symmetrized(root2 * g1.cov() * root2));
  const double value = mean_term + g1.cov().trace() + g2.cov().trace() - 2.0 * cross.trace();
  return std::max(0.0, value);
}

double expected_log_density(const Gaussian& src, const Gaussian& dst) {
  require_same_dim(src, dst, "expected_log_density");
  const auto& fd = dst.factor();
  const double d = static_cast<double>(src.dim());
  return -0.5 * (d * kLog2Pi + fd.log_det() + fd.solve(src.cov()).trace() +
                 fd.inverse_quadratic(src.mean() - dst.mean()));
}

double GaussianProduct::norm_const() const { return std::exp(log_norm_const); }

GaussianProduct product(const Gaussian& g1, const Gaussian& g2) {
  require_same_dim(g1, g2, "product");
  const Matrix p1 = g1.factor().inverse();
  const Matrix p2 = g2.factor().inverse();
  const SpdFactor precision(p1 + p2);
  const Matrix cov = precision.inverse();
  const Vector mean = cov * (p1 * g1.mean() + p2 * g2.mean());
  return {log_overlap(g1, g2), Gaussian(mean, symmetrized(cov))};
}

GaussianProduct product_affine(const Matrix& a, const Vector& b, const Matrix& cov,
                               const Gaussian& prior, const Vector& x) {
  const int k = static_cast<int>(x.size());
  if (a.rows() != k || a.cols() != prior.dim() || b.size() != k || cov.rows() != k ||
      cov.cols() != k) {
    throw DimensionMismatch("product_affine: shapes are not conformable");
  }
  const SpdFactor noise(cov);
  const Matrix prior_precision = prior.factor().inverse();
  const Matrix at_noise_inv = noise.solve(a).transpose();  // A^T S^{-1}
  Matrix precision = symmetrized(prior_precision + at_noise_inv * a);
  Matrix post_cov;
  try {
    post_cov = SpdFactor(precision).inverse();
  } catch (const NotPositiveDefinite&) {
    throw NotPositiveDefinite("product_affine: posterior precision is singular");
  }
  const Vector post_mean = post_cov * (prior_precision * prior.mean() + at_noise_inv * (x - b));
  const Gaussian predictive = marginalize_affine(a, b, cov, prior);
  return {log_density(predictive, x), Gaussian(post_mean, post_cov)};
}

Gaussian marginalize_affine(const Matrix& a, const Vector& b, const Matrix& cov,
                            const Gaussian& prior) {
  if (a.cols() != prior.dim() || a.rows() != b.size() || cov.rows() != a.rows() ||
      cov.cols() != a.rows()) {
    throw DimensionMismatch("marginalize_affine: shapes are not conformable");
  }
  return Gaussian(a * prior.mean() + b, symmetrized(cov + a * prior.cov() * a.transpose()));
}

}  // namespace mixred
