#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mixred/errors.hpp"
#include "mixred/linalg.hpp"

namespace mixred {

enum class ReductionStatus { Converged, MaxIter, Degenerate };

std::string to_string(ReductionStatus status);

inline constexpr double kCostCeiling = 1e12;
inline constexpr double kDegenerateMass = 1e-10;

/// One-sided optimal plan for a fixed cost matrix: row n of the result sums
/// to w[n]. For lambda > 0 each row is w_n softmax(-c_n / lambda) computed
/// after subtracting the row maximum; for lambda = 0 the row mass goes to the
/// smallest cost, ties resolved to the lowest column.
Matrix plan_from_costs(const Matrix& costs, std::span<const double> w, double lambda);

/// sum pi c - lambda H(pi), H(pi) = -sum pi (log pi - 1), 0 log 0 = 0.
double plan_objective(const Matrix& costs, const Matrix& plan, double lambda);

/// The majorization-minimization reduction loop, generic over the
/// component type so that Gaussian and exponential-family reductions share
/// it.
template <class Component>
struct MmFamily {
  /// c(original, reduced, reduced weight)
  std::function<double(const Component&, const Component&, double)> cost;
  /// Barycenter of the originals under the given lambdas; the previous
  /// reduced component is passed as a starting point.
  std::function<Component(std::span<const Component>, std::span<const double>, const Component&)>
      barycenter;
  /// Divergence costs are clipped below at zero; SoftNLL costs are not.
  bool nonnegative_cost = true;
  /// Accept a barycenter only when it does not raise the column's weighted
  /// cost, protecting monotonicity against inexact iterative solvers.
  bool guarded = false;
};

template <class Component>
struct MmState {
  std::vector<double> weights;
  std::vector<Component> components;
};

template <class Component>
struct MmOutcome {
  MmState<Component> state;
  Matrix plan;
  std::vector<double> trace;
  ReductionStatus status = ReductionStatus::MaxIter;
  int iterations = 0;
};

/// Called after every iteration with the state the assignment step used,
/// the plan it produced and the updated state.
template <class Component>
using MmObserver = std::function<void(int, const MmState<Component>&, const Matrix&,
                                      const MmState<Component>&)>;

template <class Component>
Matrix mm_cost_matrix(const MmFamily<Component>& family, std::span<const Component> originals,
                      const MmState<Component>& state) {
  const auto n_orig = static_cast<Eigen::Index>(originals.size());
  const auto n_red = static_cast<Eigen::Index>(state.components.size());
  Matrix c(n_orig, n_red);
  for (Eigen::Index n = 0; n < n_orig; ++n) {
    for (Eigen::Index m = 0; m < n_red; ++m) {
      double v = family.cost(originals[n], state.components[m], state.weights[m]);
      if (std::isnan(v)) throw NumericalError("cost matrix entry is NaN");
      if (v > kCostCeiling) v = kCostCeiling;
      if (family.nonnegative_cost && v < 0.0) v = 0.0;
      if (!std::isfinite(v)) throw NumericalError("cost matrix entry is -inf");
      c(n, m) = v;
    }
  }
  return c;
}

template <class Component>
MmOutcome<Component> run_mm(std::span<const double> weights, std::span<const Component> originals,
                            const MmFamily<Component>& family, double lambda, int max_iter,
                            double tol, MmState<Component> init,
                            const MmObserver<Component>& observer = {}) {
  if (weights.size() != originals.size()) throw ValidationError("mm: weight count mismatch");
  if (init.components.empty() || init.weights.size() != init.components.size()) {
    throw ValidationError("mm: malformed initial state");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("mm: lambda must be >= 0");
  if (max_iter < 0) throw ValidationError("mm: max_iter must be nonnegative");
  if (!(tol >= 0.0)) throw ValidationError("mm: tol must be nonnegative");

  const std::size_t n_red = init.components.size();
  MmOutcome<Component> out;
  out.state = std::move(init);
  Matrix costs = mm_cost_matrix(family, originals, out.state);
  Matrix plan = plan_from_costs(costs, weights, lambda);
  out.trace.push_back(plan_objective(costs, plan, lambda));
  out.plan = plan;
  std::vector<bool> frozen(n_red, false);

  for (int it = 1; it <= max_iter; ++it) {
    MmState<Component> next = out.state;
    std::fill(frozen.begin(), frozen.end(), false);
    std::vector<double> column(originals.size());
    for (std::size_t m = 0; m < n_red; ++m) {
      double mass = 0.0;
      for (std::size_t n = 0; n < originals.size(); ++n) {
        column[n] = plan(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        mass += column[n];
      }
      next.weights[m] = mass;
      if (mass < kDegenerateMass) {
        frozen[m] = true;
        continue;
      }
      const Component& previous = out.state.components[m];
      try {
        Component candidate = family.barycenter(originals, column, previous);
        if (family.guarded) {
          double old_cost = 0.0, new_cost = 0.0;
          for (std::size_t n = 0; n < originals.size(); ++n) {
            if (column[n] == 0.0) continue;
            old_cost += column[n] * family.cost(originals[n], previous, mass);
            new_cost += column[n] * family.cost(originals[n], candidate, mass);
          }
          if (!(new_cost <= old_cost)) continue;
        }
        next.components[m] = std::move(candidate);
      } catch (const NumericalError&) {
        if (!family.guarded) throw;
      }
    }
    const Matrix next_costs = mm_cost_matrix(family, originals, next);
    const Matrix next_plan = plan_from_costs(next_costs, weights, lambda);
    const double value = plan_objective(next_costs, next_plan, lambda);
    if (observer) observer(it, out.state, plan, next);
    const double previous_value = out.trace.back();
    out.plan = plan;
    out.state = std::move(next);
    out.trace.push_back(value);
    out.iterations = it;
    plan = next_plan;
    const double scale = std::max(std::abs(previous_value), std::numeric_limits<double>::min());
    if (std::abs(previous_value - value) <= tol * scale) {
      out.status = ReductionStatus::Converged;
      break;
    }
  }
  if (max_iter == 0) out.status = ReductionStatus::MaxIter;
  for (std::size_t m = 0; m < n_red; ++m) {
    if (frozen[m]) out.status = ReductionStatus::Degenerate;
  }
  return out;
}

}  // namespace mixred
