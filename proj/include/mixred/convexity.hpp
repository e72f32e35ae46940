#pragma once

#include <vector>

#include "mixred/cost.hpp"
#include "mixred/mixture.hpp"

namespace mixred {

/// \int p q over the real line by adaptive quadrature (1-d mixtures).
double l2_inner_quadrature(const GaussianMixture& p, const GaussianMixture& q);

/// CS divergence -log(\int pq / sqrt(\int p^2 \int q^2)) between 1-d
/// mixtures, all three integrals by quadrature.
double cs_quadrature(const GaussianMixture& p, const GaussianMixture& q);

/// ISE between 1-d mixtures by quadrature of (p - q)^2.
double ise_quadrature(const GaussianMixture& p, const GaussianMixture& q);

/// Joint convexity gap of a divergence D at weight alpha:
///   alpha D(f1, g1) + (1 - alpha) D(f2, g2)
///     - D(alpha f1 + (1 - alpha) f2, alpha g1 + (1 - alpha) g2).
/// A negative value witnesses non-convexity. `kind` must be ISE or CS; all
/// divergences are evaluated by quadrature.
double convexity_gap(CostKind kind, const Gaussian& f1, const Gaussian& g1, const Gaussian& f2,
                     const Gaussian& g2, double alpha);

/// The CS gap for f1 = N(-1, s^2), f2 = N(-mu, 1), g1 = N(1, 1),
/// g2 = N(mu, s^2) at alpha = 1/2.
double cs_saddle_gap(double mu, double sigma);

struct SurfaceGrid {
  double mu_lo = 0.1, mu_hi = 3.0;
  int mu_n = 30;
  double sigma_lo = 0.3, sigma_hi = 3.0;
  int sigma_n = 28;

  void validate() const;
  double mu(int i) const;
  double sigma(int j) const;
};

struct SurfacePoint {
  double mu;
  double sigma;
  double gap;
};

/// cs_saddle_gap over the grid, mu-major.
std::vector<SurfacePoint> cs_saddle_surface(const SurfaceGrid& grid);

}  // namespace mixred
