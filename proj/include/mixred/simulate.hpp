#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixred/cost.hpp"
#include "mixred/mixture.hpp"
#include "mixred/random.hpp"

namespace mixred {

/// Stream of a seed reserved for generating the original mixture, distinct
/// from the restart streams 0, 1, 2, ... used by reduce.
inline constexpr std::uint64_t kSimulationStream = 0x73696d756c617465ULL;
/// Stream reserved for drawing BP node potentials.
inline constexpr std::uint64_t kGraphStream = 0x6270677261706873ULL;

struct SimulationProtocol {
  std::size_t components = 25;
  std::size_t locations = 5;
  double box = 10.0;      ///< locations uniform in [-box, box]^2
  double radius = 2.5;    ///< component means uniform over a disk of this radius
  double gamma_shape = 8.0;
  double gamma_rate = 4.0;
  double theta_lo = 0.2, theta_hi = 0.8;
};

/// A 2-d equal-weight mixture. Draw order: location coordinates; one
/// categorical location label per component (a multinomial count vector);
/// then, per component grouped by location, the radius and angle of its
/// offset, Sigma_11, Sigma_22 and theta, with
/// Sigma_12 = sqrt(Sigma_11 Sigma_22) cos(pi theta).
GaussianMixture simulate_mixture(Rng& rng, const SimulationProtocol& protocol = {});

/// simulate_mixture on the simulation stream of `seed`.
GaussianMixture simulate_mixture(std::uint64_t seed);

struct SweepConfig {
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> orders{5, 10, 15};
  std::vector<CostKind> costs{CostKind::KL, CostKind::ISE, CostKind::CS, CostKind::W2};
  double lambda = 0.0;
  int restarts = 10;
  int max_iter = 200;
  unsigned threads = 1;
};

struct SweepRow {
  std::uint64_t seed;
  std::size_t M;
  CostKind cost;
  double objective;
  double ise;  ///< mixture ISE between the reduced and the original mixture
  int iterations;
  std::string status;
};

/// Reduces simulate_mixture(seed) for every (seed, M, cost); rows sorted by
/// (seed, M, cost). Runs are spread over `threads` workers without
/// affecting the output.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

struct SweepSummary {
  std::size_t M;
  CostKind cost;
  double mean_ise;
  std::size_t runs;
};

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);

}  // namespace mixred
