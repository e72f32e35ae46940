#pragma once

#include <cstddef>
#include <vector>

#include "mixred/gaussian.hpp"
#include "mixred/random.hpp"

namespace mixred {

/// Weights below this value are clamped to zero on construction.
inline constexpr double kWeightFloor = 1e-12;

/// Finite Gaussian mixture with normalized weights.
///
/// On construction weights must be finite and nonnegative with a positive
/// sum. Weights below kWeightFloor are set to zero, then the vector is
/// rescaled to sum to one unless it already does within 1e-12 (so already
/// normalized weights are kept bit for bit).
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components);
  explicit GaussianMixture(Gaussian single);

  std::size_t order() const { return components_.size(); }
  int dim() const { return components_.front().dim(); }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<Gaussian>& components() const { return components_; }
  const Gaussian& component(std::size_t k) const { return components_[k]; }

 private:
  std::vector<double> weights_;
  std::vector<Gaussian> components_;
};

double log_density(const GaussianMixture& mix, const Vector& x);
/// Mixture density, evaluated through log-sum-exp.
double density(const GaussianMixture& mix, const Vector& x);

/// \int p(x) q(x) dx in closed form. Bitwise symmetric in (p, q).
double l2_inner(const GaussianMixture& p, const GaussianMixture& q);

/// \int p^2, using the symmetry of the overlap matrix.
double self_l2_inner(const GaussianMixture& p);

/// Integrated squared error \int (p - q)^2 between two mixtures.
double mixture_ise(const GaussianMixture& p, const GaussianMixture& q);

/// Same as mixture_ise with \int p^2 supplied by the caller; used when one
/// large mixture is compared against many others.
double mixture_ise(const GaussianMixture& p, double p_self_inner, const GaussianMixture& q);

/// Moment-matched single Gaussian of the whole mixture.
Gaussian moment_match(const GaussianMixture& mix);

std::vector<Vector> sample(const GaussianMixture& mix, std::size_t n, Rng& rng);

struct EmOptions {
  int max_iter = 200;
  double tol = 1e-6;  ///< relative log-likelihood change
};

struct EmFit {
  GaussianMixture mixture;
  /// Sample log-likelihood after each EM iteration; entry 0 is the initial value.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
};

/// Maximum-likelihood fit of an order-M mixture by EM, starting at `init`.
/// A component whose responsibility mass falls below 1e-8 (or whose
/// covariance loses positive definiteness) is re-seeded at a random sample
/// with the global sample covariance.
EmFit fit_em(const std::vector<Vector>& samples, const GaussianMixture& init,
             const EmOptions& options, Rng& rng);

/// k-means++ seeded initialization: means chosen by D^2 sampling, all
/// covariances equal to the global sample covariance, equal weights.
GaussianMixture kmeanspp_init(const std::vector<Vector>& samples, std::size_t order, Rng& rng);

/// kmeanspp_init followed by fit_em.
EmFit fit_em(const std::vector<Vector>& samples, std::size_t order, const EmOptions& options,
             Rng& rng);

/// Sample log-likelihood sum_i log p(x_i).
double log_likelihood(const GaussianMixture& mix, const std::vector<Vector>& samples);

}  // namespace mixred
