#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mixred/mixture.hpp"

namespace mixred {

/// Adaptive Gauss-Kronrod integration of f over [lo, hi]. When breakpoints
/// are given, each sub-interval between them is integrated separately.
/// Throws NumericalError if the result is not finite.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints = {}, double rel_tol = 1e-12);

/// Scalar evaluator of a 1-d mixture density for use inside integrands.
class UnivariateMixture {
 public:
  explicit UnivariateMixture(const GaussianMixture& mix);

  double log_density(double x) const;
  double density(double x) const;

 private:
  std::vector<double> log_w_;  ///< log w_k - log(2 pi var_k) / 2
  std::vector<double> mean_;
  std::vector<double> half_precision_;
};

struct Interval {
  double lo;
  double hi;
};

/// [min(mean - 12 sd), max(mean + 12 sd)] over every component of the given
/// 1-d mixtures.
Interval support_1d(std::initializer_list<const GaussianMixture*> mixtures);

/// Component means of the given 1-d mixtures, sorted and deduplicated.
std::vector<double> component_means_1d(std::initializer_list<const GaussianMixture*> mixtures);

}  // namespace mixred
