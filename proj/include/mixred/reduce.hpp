#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mixred/barycenter.hpp"
#include "mixred/cost.hpp"
#include "mixred/mixture.hpp"
#include "mixred/mm_engine.hpp"

namespace mixred {

/// N x M nonnegative coupling between original and reduced components whose
/// row sums are the original weights.
struct TransportPlan {
  Matrix values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  double operator()(Eigen::Index n, Eigen::Index m) const { return values(n, m); }
  Vector row_sums() const { return values.rowwise().sum(); }
  Vector col_sums() const { return values.colwise().sum().transpose(); }
};

struct ReductionConfig {
  std::size_t M = 1;
  double lambda = 0.0;
  CostSpec cost = CostSpec::kl();
  int max_iter = 200;
  double tol = 1e-8;  ///< relative objective change
  int restarts = 10;
  std::uint64_t seed = 0;
  FixedPointConfig barycenter_cfg{};
  std::size_t init_samples = 1000;  ///< samples drawn per restart for the EM initialization
  EmOptions em{};

  void validate() const;
};

struct ReductionResult {
  GaussianMixture reduced;
  TransportPlan plan;
  std::vector<double> objective_trace;
  ReductionStatus status = ReductionStatus::MaxIter;
  int iterations = 0;

  double objective() const { return objective_trace.back(); }
};

/// c(phi_n, phi~_m) for every pair, with the reduced weights read by SoftNLL.
Matrix cost_matrix(const GaussianMixture& original, const GaussianMixture& reduced,
                   const CostSpec& cost);

/// The optimal one-sided plan at the current reduced mixture.
TransportPlan plan_update(const GaussianMixture& original, const GaussianMixture& reduced,
                          const CostSpec& cost, double lambda);

/// sum pi c - lambda H(pi) for the given plan.
double objective(const GaussianMixture& original, const GaussianMixture& reduced,
                 const TransportPlan& plan, const CostSpec& cost, double lambda);

using ReductionObserver = std::function<void(int iteration, const GaussianMixture& before,
                                             const TransportPlan& plan,
                                             const GaussianMixture& after)>;

/// Majorization-minimization from a given initial reduced mixture.
ReductionResult mm_reduce(const GaussianMixture& original, const ReductionConfig& cfg,
                          const GaussianMixture& init, const ReductionObserver& observer = {});

/// mm_reduce from `cfg.restarts` EM initializations, each fitted on fresh
/// samples from `original` drawn with stream r of `cfg.seed`. When M equals
/// the original order the original itself is tried first. The run with the
/// lowest final objective wins, ties going to the earliest.
ReductionResult reduce(const GaussianMixture& original, const ReductionConfig& cfg);

/// Initial mixtures used by reduce, in order.
std::vector<GaussianMixture> restart_inits(const GaussianMixture& original,
                                           const ReductionConfig& cfg);

struct ClusterReduction {
  ReductionResult result;
  /// Largest parameter difference between the engine's iterates and the
  /// clustering algorithm run step for step beside it.
  double lockstep_deviation = 0.0;
  /// Largest violation of the soft responsibility formula by z = pi / w
  /// (zero for hard clustering).
  double responsibility_residual = 0.0;
};

/// KL cost at lambda = 0: assign each component to its KL-closest
/// reduced component and merge clusters by moment matching.
ClusterReduction hard_cluster_reduce(const GaussianMixture& original, const GaussianMixture& init,
                                     int max_iter);

/// SoftNLL(I) cost at lambda = 1: responsibilities
/// z_nm proportional to w~_m exp(I E_nm), then weighted moment matching.
ClusterReduction soft_cluster_reduce(const GaussianMixture& original, double inverse_temperature,
                                     const GaussianMixture& init, int max_iter);

namespace reference {

/// One step of hard clustering written directly from its definition.
GaussianMixture hard_clustering_step(const GaussianMixture& original,
                                     const GaussianMixture& current);

/// Responsibilities z (N x M), rows summing to one.
Matrix soft_responsibilities(const GaussianMixture& original, const GaussianMixture& current,
                             double inverse_temperature);

/// One step of soft clustering written directly from its definition.
GaussianMixture soft_clustering_step(const GaussianMixture& original,
                                     const GaussianMixture& current, double inverse_temperature);

}  // namespace reference

/// Largest absolute difference across weights, means and covariances.
double parameter_distance(const GaussianMixture& a, const GaussianMixture& b);

struct SinkhornResult {
  double value;   ///< sum pi c - lambda H(pi)
  double linear;  ///< sum pi c
  Matrix plan;
  int iterations;
};

/// Entropic transport between two fixed mixtures by log-domain Sinkhorn
/// iterations with epsilon scaling. Throws NonConvergence when the marginal
/// violation is still above `tol` after `max_iter` sweeps at the target
/// lambda.
SinkhornResult ctd_sinkhorn(const GaussianMixture& p, const GaussianMixture& q,
                            const CostSpec& cost, double lambda, int max_iter = 100000,
                            double tol = 1e-9);

/// Same on an explicit cost matrix with marginals a and b.
SinkhornResult sinkhorn(const Matrix& costs, std::span<const double> a, std::span<const double> b,
                        double lambda, int max_iter = 100000, double tol = 1e-9);

struct UpperBound {
  double lhs;
  double rhs;
  bool holds;
};

/// Compares the mixture-level divergence c(p, q) with the transport cost
/// between the two mixtures (linear part at lambda = 1e-4). ISE works in
/// any dimension; KL and W2 require 1-d mixtures.
UpperBound upper_bound_check(const GaussianMixture& p, const GaussianMixture& q,
                             CostKind cost);

/// KL(p || q) for 1-d mixtures by adaptive quadrature.
double mixture_kl_1d(const GaussianMixture& p, const GaussianMixture& q);

/// Squared 2-Wasserstein distance between 1-d mixtures through their
/// quantile functions.
double mixture_w2_squared_1d(const GaussianMixture& p, const GaussianMixture& q);

}  // namespace mixred
