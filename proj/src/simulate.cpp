#include "mixred/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <numbers>
#include <thread>

#include "mixred/errors.hpp"
#include "mixred/reduce.hpp"

namespace mixred {

GaussianMixture simulate_mixture(Rng& rng, const SimulationProtocol& protocol) {
  if (protocol.components < 1 || protocol.locations < 1) {
    throw ValidationError("simulate: need at least one component and location");
  }
  std::vector<Vector> centers;
  for (std::size_t l = 0; l < protocol.locations; ++l) {
    Vector c(2);
    c(0) = rng.uniform(-protocol.box, protocol.box);
    c(1) = rng.uniform(-protocol.box, protocol.box);
    centers.push_back(c);
  }
  const std::vector<double> probs(protocol.locations, 1.0 / static_cast<double>(protocol.locations));
  std::vector<std::size_t> counts(protocol.locations, 0);
  for (std::size_t n = 0; n < protocol.components; ++n) ++counts[rng.categorical(probs)];

  std::vector<Gaussian> comps;
  for (std::size_t l = 0; l < protocol.locations; ++l) {
    for (std::size_t k = 0; k < counts[l]; ++k) {
      const double r = protocol.radius * std::sqrt(rng.uniform());
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      Vector mean = centers[l];
      mean(0) += r * std::cos(angle);
      mean(1) += r * std::sin(angle);
      const double s11 = rng.gamma(protocol.gamma_shape, protocol.gamma_rate);
      const double s22 = rng.gamma(protocol.gamma_shape, protocol.gamma_rate);
      const double theta = rng.uniform(protocol.theta_lo, protocol.theta_hi);
      Matrix cov(2, 2);
      cov(0, 0) = s11;
      cov(1, 1) = s22;
      cov(0, 1) = cov(1, 0) = std::sqrt(s11 * s22) * std::cos(std::numbers::pi * theta);
      comps.emplace_back(mean, cov);
    }
  }
  const std::vector<double> weights(protocol.components, 1.0 / static_cast<double>(protocol.components));
  return GaussianMixture(weights, std::move(comps));
}

GaussianMixture simulate_mixture(std::uint64_t seed) {
  Rng rng(seed, kSimulationStream);
  return simulate_mixture(rng);
}

namespace {

CostSpec spec_of(CostKind kind) {
  switch (kind) {
    case CostKind::KL: return CostSpec::kl();
    case CostKind::ISE: return CostSpec::ise();
    case CostKind::CS: return CostSpec::cs();
    case CostKind::W2: return CostSpec::w2();
    case CostKind::SoftNLL: return CostSpec::soft_nll(1.0);
  }
  throw ValidationError("unknown cost");
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  struct Job {
    std::uint64_t seed;
    std::size_t M;
    CostKind cost;
  };
  std::vector<Job> jobs;
  for (std::uint64_t s : cfg.seeds) {
    for (std::size_t M : cfg.orders) {
      for (CostKind c : cfg.costs) jobs.push_back({s, M, c});
    }
  }
  std::vector<std::optional<SweepRow>> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      try {
        const GaussianMixture original = simulate_mixture(job.seed);
        ReductionConfig rc;
        rc.M = job.M;
        rc.cost = spec_of(job.cost);
        rc.lambda = job.cost == CostKind::SoftNLL ? 1.0 : cfg.lambda;
        rc.restarts = cfg.restarts;
        rc.max_iter = cfg.max_iter;
        rc.seed = job.seed;
        const ReductionResult r = reduce(original, rc);
        rows[k] = SweepRow{job.seed, job.M, job.cost, r.objective(), mixture_ise(original, r.reduced),
                           r.iterations, to_string(r.status)};
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, cfg.threads);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<SweepRow> out;
  for (auto& r : rows) out.push_back(std::move(*r));
  std::sort(out.begin(), out.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.seed, a.M, a.cost) < std::tie(b.seed, b.M, b.cost);
  });
  return out;
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::map<std::pair<std::size_t, CostKind>, std::pair<double, std::size_t>> acc;
  for (const SweepRow& r : rows) {
    auto& slot = acc[{r.M, r.cost}];
    slot.first += r.ise;
    ++slot.second;
  }
  std::vector<SweepSummary> out;
  for (const auto& [key, value] : acc) {
    out.push_back({key.first, key.second, value.first / static_cast<double>(value.second), value.second});
  }
  return out;
}

}  // namespace mixred
