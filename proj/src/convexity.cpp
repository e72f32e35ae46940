#include "mixred/convexity.hpp"

#include <cmath>

#include "mixred/errors.hpp"
#include "mixred/quadrature.hpp"

namespace mixred {

namespace {

double integrate_pair(const GaussianMixture& p, const GaussianMixture& q,
                      double (*combine)(double, double)) {
  const Interval range = support_1d({&p, &q});
  const std::vector<double> knots = component_means_1d({&p, &q});
  const UnivariateMixture up(p), uq(q);
  return integrate([&](double t) { return combine(up.density(t), uq.density(t)); },
      range.lo, range.hi, knots);
}

GaussianMixture blend(const Gaussian& a, const Gaussian& b, double alpha) {
  return GaussianMixture({alpha, 1.0 - alpha}, {a, b});
}

}  // namespace

double l2_inner_quadrature(const GaussianMixture& p, const GaussianMixture& q) {
  return integrate_pair(p, q, [](double a, double b) { return a * b; });
}

double ise_quadrature(const GaussianMixture& p, const GaussianMixture& q) {
  return integrate_pair(p, q, [](double a, double b) { return (a - b) * (a - b); });
}

double cs_quadrature(const GaussianMixture& p, const GaussianMixture& q) {
  const double pq = l2_inner_quadrature(p, q);
  const double pp = l2_inner_quadrature(p, p);
  const double qq = l2_inner_quadrature(q, q);
  if (!(pq > 0.0)) throw NumericalError("cs_quadrature: overlap integral vanished");
  return -std::log(pq) + 0.5 * (std::log(pp) + std::log(qq));
}

double convexity_gap(CostKind kind, const Gaussian& f1, const Gaussian& g1, const Gaussian& f2,
                     const Gaussian& g2, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("convexity_gap: alpha must be in (0, 1)");
  double (*divergence)(const GaussianMixture&, const GaussianMixture&) = nullptr;
  switch (kind) {
    case CostKind::ISE: divergence = &ise_quadrature; break;
    case CostKind::CS: divergence = &cs_quadrature; break;
    default: throw ValidationError("convexity_gap: divergence must be ise or cs");
  }
  const GaussianMixture mf1(f1), mg1(g1), mf2(f2), mg2(g2);
  return alpha * divergence(mf1, mg1) + (1.0 - alpha) * divergence(mf2, mg2) -
         divergence(blend(f1, f2, alpha), blend(g1, g2, alpha));
}

double cs_saddle_gap(double mu, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("cs_saddle_gap: sigma must be positive");
  const double var = sigma * sigma;
  return convexity_gap(CostKind::CS, Gaussian::univariate(-1.0, var), Gaussian::univariate(1.0, 1.0),
                       Gaussian::univariate(-mu, 1.0), Gaussian::univariate(mu, var), 0.5);
}

void SurfaceGrid::validate() const {
  if (mu_n < 1 || sigma_n < 1) throw ValidationError("grid: point counts must be positive");
  if (!(mu_lo > 0.0 && mu_hi >= mu_lo)) throw ValidationError("grid: mu range must be positive and ordered");
  if (!(sigma_lo > 0.0 && sigma_hi >= sigma_lo)) {
    throw ValidationError("grid: sigma range must be positive and ordered");
  }
}

double SurfaceGrid::mu(int i) const {
  return mu_n == 1 ? mu_lo : mu_lo + (mu_hi - mu_lo) * i / (mu_n - 1);
}

double SurfaceGrid::sigma(int j) const {
  return sigma_n == 1 ? sigma_lo : sigma_lo + (sigma_hi - sigma_lo) * j / (sigma_n - 1);
}

std::vector<SurfacePoint> cs_saddle_surface(const SurfaceGrid& grid) {
  grid.validate();
  std::vector<SurfacePoint> out;
  out.reserve(static_cast<std::size_t>(grid.mu_n) * static_cast<std::size_t>(grid.sigma_n));
  for (int i = 0; i < grid.mu_n; ++i) {
    for (int j = 0; j < grid.sigma_n; ++j) {
      out.push_back({grid.mu(i), grid.sigma(j), cs_saddle_gap(grid.mu(i), grid.sigma(j))});
    }
  }
  return out;
}

}  // namespace mixred
