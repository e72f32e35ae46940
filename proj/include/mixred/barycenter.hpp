#pragma once

#include <span>
#include <vector>

#include "mixred/cost.hpp"
#include "mixred/gaussian.hpp"

namespace mixred {

/// Weighted barycenter problem: minimize sum_l lambda_l c(phi_l, phi) over
/// Gaussians phi. Lambdas need not be normalized; entries equal to zero are
/// dropped before solving.
struct BarycenterProblem {
  std::vector<Gaussian> components;
  std::vector<double> lambdas;
  CostSpec cost;
};

struct FixedPointConfig {
  int max_iter = 2000;
  double tol = 1e-10;    ///< parameter-change norm (relative to 1 + |Sigma|)
  double damping = 0.5;  ///< in (0, 1]

  void validate() const;
};

struct BarycenterSolution {
  Gaussian gaussian;
  bool converged = true;  ///< false marks a warning: best iterate returned
  int iterations = 0;
};

/// Moment matching; exact minimizer under KL.
Gaussian kl_barycenter(const BarycenterProblem& prob);
/// Stationary point of the CS objective by damped alternating fixed point,
/// polished by gradient descent when the fixed point stalls. Throws
/// NonConvergence if the exit stationarity check fails.
BarycenterSolution cs_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg = {});
/// Gradient descent with backtracking on (mean, log-Cholesky) coordinates,
/// started at the moment-matched Gaussian. Line-search failure returns the
/// current iterate with converged = false.
BarycenterSolution ise_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg = {});
/// Fixed-point iteration for the covariance of the W2 barycenter.
BarycenterSolution w2_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg = {});

/// Dispatches on prob.cost. SoftNLL reduces to the KL barycenter.
BarycenterSolution solve_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg = {});

/// Same as above without materializing a BarycenterProblem. Iterative
/// solvers start from `warm_start` (may be null) instead of the
/// moment-matched Gaussian when it has the lower objective.
BarycenterSolution solve_barycenter(std::span<const Gaussian> components,
                                    std::span<const double> lambdas, const CostSpec& cost,
                                    const FixedPointConfig& cfg = {},
                                    const Gaussian* warm_start = nullptr);

/// sum_l lambda_l c(phi_l, g), with SoftNLL evaluated at unit reduced weight.
double barycenter_objective(const BarycenterProblem& prob, const Gaussian& g);

/// Central-difference gradient of barycenter_objective with respect to the
/// mean and the lower-triangular covariance entries (off-diagonal entries
/// perturbed symmetrically). Step is rel_step * max(1, |parameter|).
Vector barycenter_gradient_fd(const BarycenterProblem& prob, const Gaussian& g,
                              double rel_step = 1e-5);

}  // namespace mixred
