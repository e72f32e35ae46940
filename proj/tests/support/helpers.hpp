#pragma once

#include <vector>

#include "mixred/gaussian.hpp"
#include "mixred/mixture.hpp"
#include "mixred/random.hpp"
#include "oracles.hpp"

namespace testing_support {

inline oracle::Mixture1d to_1d(const mixred::GaussianMixture& mix) {
  oracle::Mixture1d out;
  for (std::size_t k = 0; k < mix.order(); ++k) {
    out.push_back({mix.weight(k), mix.component(k).mean()(0), mix.component(k).cov()(0, 0)});
  }
  return out;
}

inline oracle::Mixture1d to_1d(const mixred::Gaussian& g) {
  return {{1.0, g.mean()(0), g.cov()(0, 0)}};
}

/// Random SPD matrix with eigenvalues roughly in [0.2, 3].
inline mixred::Matrix random_spd(int d, mixred::Rng& rng) {
  mixred::Matrix a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<mixred::Matrix> qr(a);
  const mixred::Matrix q = qr.householderQ();
  mixred::Vector ev(d);
  for (int i = 0; i < d; ++i) ev(i) = rng.uniform(0.2, 3.0);
  const mixred::Matrix s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

inline mixred::Gaussian random_gaussian(int d, mixred::Rng& rng, double spread = 2.0) {
  mixred::Vector mu(d);
  for (int i = 0; i < d; ++i) mu(i) = rng.uniform(-spread, spread);
  return mixred::Gaussian(mu, random_spd(d, rng));
}

inline mixred::Gaussian random_gaussian_1d(mixred::Rng& rng, double spread = 2.0) {
  return mixred::Gaussian::univariate(rng.uniform(-spread, spread), rng.uniform(0.2, 3.0));
}

inline mixred::GaussianMixture random_mixture(std::size_t order, int d, mixred::Rng& rng,
                                              double spread = 3.0) {
  std::vector<double> w;
  std::vector<mixred::Gaussian> c;
  for (std::size_t k = 0; k < order; ++k) {
    w.push_back(rng.uniform(0.1, 1.0));
    c.push_back(random_gaussian(d, rng, spread));
  }
  return mixred::GaussianMixture(std::move(w), std::move(c));
}

}  // namespace testing_support
