#include "mixred/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixred/errors.hpp"

namespace mixred {

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints, double rel_tol) {
  if (!(lo < hi)) throw ValidationError("integrate: empty interval");
  std::vector<double> knots{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) knots.push_back(b);
  }
  knots.push_back(hi);
  std::sort(knots.begin(), knots.end());
  const double merge = 1e-9 * (hi - lo);
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [&](double a, double b) { return b - a <= merge; }),
              knots.end());
  knots.back() = hi;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, knots[k], knots[k + 1],
                                                                           15, rel_tol);
  }
  if (!std::isfinite(total)) throw NumericalError("integrate: non-finite result");
  return total;
}

UnivariateMixture::UnivariateMixture(const GaussianMixture& mix) {
  if (mix.dim() != 1) throw DimensionMismatch("UnivariateMixture: mixture must be univariate");
  for (std::size_t k = 0; k < mix.order(); ++k) {
    if (mix.weight(k) == 0.0) continue;
    const double var = mix.component(k).cov()(0, 0);
    log_w_.push_back(std::log(mix.weight(k)) - 0.5 * std::log(2.0 * std::numbers::pi * var));
    mean_.push_back(mix.component(k).mean()(0));
    half_precision_.push_back(0.5 / var);
  }
}

double UnivariateMixture::log_density(double x) const {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double z = x - mean_[k];
    top = std::max(top, log_w_[k] - half_precision_[k] * z * z);
  }
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double z = x - mean_[k];
    s += std::exp(log_w_[k] - half_precision_[k] * z * z - top);
  }
  return top + std::log(s);
}

double UnivariateMixture::density(double x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const double z = x - mean_[k];
    s += std::exp(log_w_[k] - half_precision_[k] * z * z);
  }
  return s;
}

Interval support_1d(std::initializer_list<const GaussianMixture*> mixtures) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const GaussianMixture* mix : mixtures) {
    if (mix->dim() != 1) throw DimensionMismatch("support_1d: mixtures must be univariate");
    for (const Gaussian& g : mix->components()) {
      const double sd = std::sqrt(g.cov()(0, 0));
      lo = std::min(lo, g.mean()(0) - 12.0 * sd);
      hi = std::max(hi, g.mean()(0) + 12.0 * sd);
    }
  }
  return {lo, hi};
}

std::vector<double> component_means_1d(std::initializer_list<const GaussianMixture*> mixtures) {
  std::vector<double> means;
  for (const GaussianMixture* mix : mixtures) {
    for (const Gaussian& g : mix->components()) means.push_back(g.mean()(0));
  }
  std::sort(means.begin(), means.end());
  means.erase(std::unique(means.begin(), means.end()), means.end());
  return means;
}

}  // namespace mixred
