#include "mixred/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "mixred/errors.hpp"
#include "mixred/quadrature.hpp"

namespace mixred {

std::string to_string(ReductionStatus status) {
  switch (status) {
    case ReductionStatus::Converged: return "converged";
    case ReductionStatus::MaxIter: return "max_iter";
    case ReductionStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

Matrix plan_from_costs(const Matrix& costs, std::span<const double> w, double lambda) {
  if (static_cast<std::size_t>(costs.rows()) != w.size()) {
    throw DimensionMismatch("plan: cost rows do not match weights");
  }
  if (!costs.allFinite()) throw NumericalError("plan: non-finite cost entry");
  const Eigen::Index rows = costs.rows(), cols = costs.cols();
  Matrix plan = Matrix::Zero(rows, cols);
  for (Eigen::Index n = 0; n < rows; ++n) {
    if (lambda == 0.0) {
      Eigen::Index best = 0;
      for (Eigen::Index m = 1; m < cols; ++m) {
        if (costs(n, m) < costs(n, best)) best = m;
      }
      plan(n, best) = w[static_cast<std::size_t>(n)];
      continue;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < cols; ++m) top = std::max(top, -costs(n, m) / lambda);
    double total = 0.0;
    for (Eigen::Index m = 0; m < cols; ++m) {
      plan(n, m) = std::exp(-costs(n, m) / lambda - top);
      total += plan(n, m);
    }
    const double scale = w[static_cast<std::size_t>(n)] / total;
    for (Eigen::Index m = 0; m < cols; ++m) plan(n, m) *= scale;
  }
  return plan;
}

double plan_objective(const Matrix& costs, const Matrix& plan, double lambda) {
  if (costs.rows() != plan.rows() || costs.cols() != plan.cols()) {
    throw DimensionMismatch("objective: plan and cost shapes differ");
  }
  double linear = 0.0, neg_entropy = 0.0;
  for (Eigen::Index n = 0; n < plan.rows(); ++n) {
    for (Eigen::Index m = 0; m < plan.cols(); ++m) {
      const double p = plan(n, m);
      if (p <= 0.0) continue;
      linear += p * costs(n, m);
      neg_entropy += p * (std::log(p) - 1.0);
    }
  }
  return lambda == 0.0 ? linear : linear + lambda * neg_entropy;
}

void ReductionConfig::validate() const {
  if (M < 1) throw ValidationError("ReductionConfig: M must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("ReductionConfig: lambda must be finite and >= 0");
  }
  cost.validate();
  if (max_iter < 0) throw ValidationError("ReductionConfig: max_iter must be >= 0");
  if (!(tol >= 0.0)) throw ValidationError("ReductionConfig: tol must be >= 0");
  if (restarts < 1) throw ValidationError("ReductionConfig: restarts must be >= 1");
  barycenter_cfg.validate();
}

Matrix cost_matrix(const GaussianMixture& original, const GaussianMixture& reduced,
                   const CostSpec& cost) {
  if (original.dim() != reduced.dim()) throw DimensionMismatch("cost_matrix: dimensions differ");
  Matrix c(static_cast<Eigen::Index>(original.order()), static_cast<Eigen::Index>(reduced.order()));
  for (std::size_t n = 0; n < original.order(); ++n) {
    for (std::size_t m = 0; m < reduced.order(); ++m) {
      c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
          component_cost(cost, original.component(n), reduced.component(m), reduced.weight(m));
    }
  }
  return c;
}

namespace {

MmFamily<Gaussian> gaussian_family(const CostSpec& cost, const FixedPointConfig& cfg) {
  MmFamily<Gaussian> family;
  family.cost = [cost](const Gaussian& o, const Gaussian& r, double w) {
    return component_cost(cost, o, r, w);
  };
  family.barycenter = [cost, cfg](std::span<const Gaussian> comps, std::span<const double> lambdas,
                                  const Gaussian& previous) {
    return solve_barycenter(comps, lambdas, cost, cfg, &previous).gaussian;
  };
  family.nonnegative_cost = cost.kind != CostKind::SoftNLL;
  family.guarded = cost.kind == CostKind::ISE || cost.kind == CostKind::CS || cost.kind == CostKind::W2;
  return family;
}

MmState<Gaussian> to_state(const GaussianMixture& mix) { return {mix.weights(), mix.components()}; }

GaussianMixture to_mixture(const MmState<Gaussian>& state) {
  return GaussianMixture(state.weights, state.components);
}

// The clipped cost matrix the engine itself works with.
Matrix engine_costs(const GaussianMixture& original, const GaussianMixture& reduced,
                    const CostSpec& cost) {
  const MmFamily<Gaussian> family = gaussian_family(cost, FixedPointConfig{});
  return mm_cost_matrix<Gaussian>(family, original.components(), to_state(reduced));
}

}  // namespace

TransportPlan plan_update(const GaussianMixture& original, const GaussianMixture& reduced,
                          const CostSpec& cost, double lambda) {
  if (!(lambda >= 0.0)) throw ValidationError("plan_update: lambda must be >= 0");
  return {plan_from_costs(engine_costs(original, reduced, cost), original.weights(), lambda)};
}

double objective(const GaussianMixture& original, const GaussianMixture& reduced,
                 const TransportPlan& plan, const CostSpec& cost, double lambda) {
  return plan_objective(engine_costs(original, reduced, cost), plan.values, lambda);
}

ReductionResult mm_reduce(const GaussianMixture& original, const ReductionConfig& cfg,
                          const GaussianMixture& init, const ReductionObserver& observer) {
  cfg.validate();
  if (init.order() != cfg.M) throw ValidationError("mm_reduce: initial mixture order differs from M");
  if (init.dim() != original.dim()) throw DimensionMismatch("mm_reduce: initial mixture dimension");
  const MmFamily<Gaussian> family = gaussian_family(cfg.cost, cfg.barycenter_cfg);
  MmObserver<Gaussian> hook;
  if (observer) {
    hook = [&](int it, const MmState<Gaussian>& before, const Matrix& plan,
               const MmState<Gaussian>& after) {
      observer(it, to_mixture(before), TransportPlan{plan}, to_mixture(after));
    };
  }
  MmOutcome<Gaussian> out = run_mm<Gaussian>(original.weights(), original.components(), family,
                                             cfg.lambda, cfg.max_iter, cfg.tol, to_state(init), hook);
  return {to_mixture(out.state), TransportPlan{std::move(out.plan)}, std::move(out.trace), out.status,
          out.iterations};
}

std::vector<GaussianMixture> restart_inits(const GaussianMixture& original,
                                           const ReductionConfig& cfg) {
  cfg.validate();
  if (cfg.M > original.order()) throw ValidationError("reduce: M exceeds the original order");
  std::vector<GaussianMixture> inits;
  if (cfg.M == original.order()) inits.push_back(original);
  const std::size_t needed = 10 * cfg.M * static_cast<std::size_t>(original.dim() + 1);
  const std::size_t n_samples = std::max(cfg.init_samples, needed);
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(r));
    const std::vector<Vector> samples = sample(original, n_samples, rng);
    try {
      inits.push_back(fit_em(samples, cfg.M, cfg.em, rng).mixture);
    } catch (const NumericalError&) {
      // An initialization that EM cannot produce is simply skipped.
    }
  }
  if (inits.empty()) throw NumericalError("reduce: every initialization failed");
  return inits;
}

ReductionResult reduce(const GaussianMixture& original, const ReductionConfig& cfg) {
  const std::vector<GaussianMixture> inits = restart_inits(original, cfg);
  std::optional<ReductionResult> best;
  for (const GaussianMixture& init : inits) {
    ReductionResult run = mm_reduce(original, cfg, init);
    if (!best || run.objective() < best->objective()) best = std::move(run);
  }
  return std::move(*best);
}

double parameter_distance(const GaussianMixture& a, const GaussianMixture& b) {
  if (a.order() != b.order() || a.dim() != b.dim()) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < a.order(); ++k) {
    worst = std::max(worst, std::abs(a.weight(k) - b.weight(k)));
    worst = std::max(worst, (a.component(k).mean() - b.component(k).mean()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.component(k).cov() - b.component(k).cov()).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace reference {

namespace {

// Weighted moment matching of the listed components; `previous` is kept
// when the cluster carries no mass.
Gaussian merge(const GaussianMixture& original, const std::vector<double>& weight_in_cluster,
               double cluster_weight, const Gaussian& previous) {
  if (cluster_weight <= 0.0) return previous;
  const int d = original.dim();
  Vector mean = Vector::Zero(d);
  for (std::size_t n = 0; n < original.order(); ++n) {
    mean += weight_in_cluster[n] * original.component(n).mean();
  }
  mean /= cluster_weight;
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t n = 0; n < original.order(); ++n) {
    const Vector diff = original.component(n).mean() - mean;
    cov += weight_in_cluster[n] * (original.component(n).cov() + diff * diff.transpose());
  }
  return Gaussian(mean, symmetrized(cov / cluster_weight));
}

}  // namespace

GaussianMixture hard_clustering_step(const GaussianMixture& original,
                                     const GaussianMixture& current) {
  const std::size_t M = current.order();
  std::vector<std::size_t> label(original.order());
  for (std::size_t n = 0; n < original.order(); ++n) {
    std::size_t best = 0;
    double best_kl = kl(original.component(n), current.component(0));
    for (std::size_t m = 1; m < M; ++m) {
      const double v = kl(original.component(n), current.component(m));
      if (v < best_kl) {
        best_kl = v;
        best = m;
      }
    }
    label[n] = best;
  }
  std::vector<double> weights(M, 0.0);
  std::vector<Gaussian> comps;
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> member(original.order(), 0.0);
    for (std::size_t n = 0; n < original.order(); ++n) {
      if (label[n] == m) {
        member[n] = original.weight(n);
        weights[m] += original.weight(n);
      }
    }
    comps.push_back(merge(original, member, weights[m], current.component(m)));
  }
  return GaussianMixture(weights, comps);
}

Matrix soft_responsibilities(const GaussianMixture& original, const GaussianMixture& current,
                             double inverse_temperature) {
  const auto N = static_cast<Eigen::Index>(original.order());
  const auto M = static_cast<Eigen::Index>(current.order());
  Matrix z(N, M);
  for (Eigen::Index n = 0; n < N; ++n) {
    Vector logits(M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const double e = expected_log_density(original.component(static_cast<std::size_t>(n)),
                                            current.component(static_cast<std::size_t>(m)));
      const double w = current.weight(static_cast<std::size_t>(m));
      logits(m) = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) +
                  inverse_temperature * e;
    }
    const double top = logits.maxCoeff();
    double total = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) {
      z(n, m) = std::exp(logits(m) - top);
      total += z(n, m);
    }
    z.row(n) /= total;
  }
  return z;
}

GaussianMixture soft_clustering_step(const GaussianMixture& original,
                                     const GaussianMixture& current, double inverse_temperature) {
  const Matrix z = soft_responsibilities(original, current, inverse_temperature);
  const std::size_t M = current.order();
  std::vector<double> weights(M, 0.0);
  std::vector<Gaussian> comps;
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> member(original.order());
    for (std::size_t n = 0; n < original.order(); ++n) {
      member[n] = original.weight(n) * z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      weights[m] += member[n];
    }
    comps.push_back(merge(original, member, weights[m], current.component(m)));
  }
  return GaussianMixture(weights, comps);
}

}  // namespace reference

namespace {

ClusterReduction lockstep(const GaussianMixture& original, const GaussianMixture& init,
                          const ReductionConfig& cfg,
                          const std::function<GaussianMixture(const GaussianMixture&)>& step,
                          const std::function<double(const GaussianMixture&, const TransportPlan&)>&
                              residual) {
  ClusterReduction out{ReductionResult{init, {}, {}, ReductionStatus::MaxIter, 0}, 0.0, 0.0};
  GaussianMixture shadow = init;
  out.result = mm_reduce(original, cfg, init,
                         [&](int, const GaussianMixture& before, const TransportPlan& plan,
                             const GaussianMixture& after) {
                           shadow = step(shadow);
                           out.lockstep_deviation =
                               std::max(out.lockstep_deviation, parameter_distance(shadow, after));
                           out.responsibility_residual =
                               std::max(out.responsibility_residual, residual(before, plan));
                         });
  return out;
}

}  // namespace

ClusterReduction hard_cluster_reduce(const GaussianMixture& original, const GaussianMixture& init,
                                     int max_iter) {
  ReductionConfig cfg;
  cfg.M = init.order();
  cfg.lambda = 0.0;
  cfg.cost = CostSpec::kl();
  cfg.max_iter = max_iter;
  return lockstep(
      original, init, cfg,
      [&](const GaussianMixture& cur) { return reference::hard_clustering_step(original, cur); },
      [](const GaussianMixture&, const TransportPlan&) { return 0.0; });
}

ClusterReduction soft_cluster_reduce(const GaussianMixture& original, double inverse_temperature,
                                     const GaussianMixture& init, int max_iter) {
  ReductionConfig cfg;
  cfg.M = init.order();
  cfg.lambda = 1.0;
  cfg.cost = CostSpec::soft_nll(inverse_temperature);
  cfg.max_iter = max_iter;
  return lockstep(
      original, init, cfg,
      [&](const GaussianMixture& cur) {
        return reference::soft_clustering_step(original, cur, inverse_temperature);
      },
      [&](const GaussianMixture& before, const TransportPlan& plan) {
        const Matrix z = reference::soft_responsibilities(original, before, inverse_temperature);
        double worst = 0.0;
        for (Eigen::Index n = 0; n < plan.rows(); ++n) {
          const double w = original.weight(static_cast<std::size_t>(n));
          if (w <= 0.0) continue;
          for (Eigen::Index m = 0; m < plan.cols(); ++m) {
            worst = std::max(worst, std::abs(plan(n, m) / w - z(n, m)));
          }
        }
        return worst;
      });
}

namespace {

double log_sum_exp(const Vector& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

namespace {

constexpr int kPolishAfter = 200;
constexpr int kPolishSteps = 50;

}  // namespace

SinkhornResult sinkhorn(const Matrix& costs, std::span<const double> a, std::span<const double> b,
                        double lambda, int max_iter, double tol) {
  if (!(lambda > 0.0)) throw ValidationError("sinkhorn: lambda must be positive");
  if (static_cast<std::size_t>(costs.rows()) != a.size() ||
      static_cast<std::size_t>(costs.cols()) != b.size()) {
    throw DimensionMismatch("sinkhorn: marginals do not match the cost matrix");
  }
  if (!costs.allFinite()) throw NumericalError("sinkhorn: non-finite cost entry");
  const Eigen::Index N = costs.rows(), M = costs.cols();
  Vector log_a(N), log_b(M);
  const double minus_inf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index n = 0; n < N; ++n) log_a(n) = a[n] > 0.0 ? std::log(a[n]) : minus_inf;
  for (Eigen::Index m = 0; m < M; ++m) log_b(m) = b[m] > 0.0 ? std::log(b[m]) : minus_inf;

  Vector f = Vector::Zero(N), g = Vector::Zero(M);
  int total_iter = 0;
  auto plan_at = [&](double eps) {
    Matrix p(N, M);
    for (Eigen::Index n = 0; n < N; ++n) {
      for (Eigen::Index m = 0; m < M; ++m) {
        p(n, m) = (a[n] > 0.0 && b[m] > 0.0) ? std::exp((f(n) + g(m) - costs(n, m)) / eps) : 0.0;
      }
    }
    return p;
  };
  auto sweep = [&](double eps) {
    Vector row(M), col(N);
    for (Eigen::Index n = 0; n < N; ++n) {
      if (a[n] <= 0.0) continue;
      for (Eigen::Index m = 0; m < M; ++m) {
        row(m) = b[m] > 0.0 ? (g(m) - costs(n, m)) / eps : minus_inf;
      }
      f(n) = eps * (log_a(n) - log_sum_exp(row));
    }
    for (Eigen::Index m = 0; m < M; ++m) {
      if (b[m] <= 0.0) continue;
      for (Eigen::Index n = 0; n < N; ++n) {
        col(n) = a[n] > 0.0 ? (f(n) - costs(n, m)) / eps : minus_inf;
      }
      g(m) = eps * (log_b(m) - log_sum_exp(col));
    }
  };
  auto row_violation = [&](double eps) {
    const Matrix p = plan_at(eps);
    double v = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) v = std::max(v, std::abs(p.row(n).sum() - a[n]));
    return v;
  };

  auto marginal_violation = [&](double eps) {
    const Matrix p = plan_at(eps);
    double v = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) v = std::max(v, std::abs(p.row(n).sum() - a[n]));
    for (Eigen::Index m = 0; m < M; ++m) v = std::max(v, std::abs(p.col(m).sum() - b[m]));
    return v;
  };
  auto dual = [&](const Vector& ff, const Vector& gg, double eps) {
    double lin = 0.0, mass = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
      if (a[n] > 0.0) lin += a[n] * ff(n);
    }
    for (Eigen::Index m = 0; m < M; ++m) {
      if (b[m] > 0.0) lin += b[m] * gg(m);
    }
    for (Eigen::Index n = 0; n < N; ++n) {
      for (Eigen::Index m = 0; m < M; ++m) {
        if (a[n] > 0.0 && b[m] > 0.0) mass += std::exp((ff(n) + gg(m) - costs(n, m)) / eps);
      }
    }
    return lin - eps * mass;
  };
  Eigen::Index pin = M - 1;
  while (pin > 0 && b[pin] <= 0.0) --pin;
  // Damped Newton ascent on the dual, with one potential pinned to fix the
  // additive gauge. Sweeps alone stall when the plan is close to sparse.
  auto newton_polish = [&](double eps, int steps) {
    const Eigen::Index K = N + M;
    for (int s = 0; s < steps; ++s) {
      const double violation = marginal_violation(eps);
      if (violation < tol) return true;
      const Matrix p = plan_at(eps);
      Vector grad = Vector::Zero(K);
      Matrix H = Matrix::Zero(K, K);
      for (Eigen::Index n = 0; n < N; ++n) {
        grad(n) = a[n] - p.row(n).sum();
        H(n, n) = p.row(n).sum() / eps;
      }
      for (Eigen::Index m = 0; m < M; ++m) {
        grad(N + m) = b[m] - p.col(m).sum();
        H(N + m, N + m) = p.col(m).sum() / eps;
        for (Eigen::Index n = 0; n < N; ++n) H(n, N + m) = H(N + m, n) = p(n, m) / eps;
      }
      for (Eigen::Index k = 0; k < K; ++k) {
        const bool fixed = k < N ? a[k] <= 0.0 : (b[k - N] <= 0.0 || k - N == pin);
        if (!fixed) continue;
        H.row(k).setZero();
        H.col(k).setZero();
        H(k, k) = 1.0;
        grad(k) = 0.0;
      }
      H.diagonal().array() += 1e-9 * H.diagonal().maxCoeff();
      const Vector d = H.ldlt().solve(grad);
      if (!d.allFinite() || !(grad.dot(d) > 0.0)) return false;
      const double current = dual(f, g, eps);
      bool accepted = false;
      for (double t = 1.0; t > 1e-12; t *= 0.5) {
        const Vector ft = f + t * d.head(N), gt = g + t * d.tail(M);
        const double value = dual(ft, gt, eps);
        if (!std::isfinite(value)) continue;
        const Vector fs = f, gs = g;
        f = ft;
        g = gt;
        if (value >= current + 1e-4 * t * grad.dot(d) || marginal_violation(eps) < violation) {
          accepted = true;
          break;
        }
        f = fs;
        g = gs;
      }
      ++total_iter;
      if (!accepted) return marginal_violation(eps) < tol;
    }
    return marginal_violation(eps) < tol;
  };

  // Epsilon scaling: solve a sequence of problems with decreasing
  // regularization, warm-starting the potentials.
  const double scale = std::max(costs.cwiseAbs().maxCoeff(), lambda);
  std::vector<double> schedule;
  for (double eps = scale; eps > lambda; eps *= 0.5) schedule.push_back(eps);
  schedule.push_back(lambda);
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const double stage_tol = last ? tol : std::max(tol, 1e-6);
    const int budget = last ? max_iter : std::min(max_iter, 1000);
    bool done = false;
    for (int it = 0; it < budget; ++it) {
      sweep(eps);
      ++total_iter;
      if ((it + 1) % 5 == 0 || it + 1 == budget) {
        if (row_violation(eps) < stage_tol) {
          done = true;
          break;
        }
      }
      if (last && it + 1 == kPolishAfter && newton_polish(eps, kPolishSteps)) {
        done = true;
        break;
      }
    }
    if (last && !done) throw NonConvergence("sinkhorn: marginals not matched within max_iter");
  }
  const Matrix plan = plan_at(lambda);
  double linear = 0.0, neg_entropy = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index m = 0; m < M; ++m) {
      const double p = plan(n, m);
      if (p <= 0.0) continue;
      linear += p * costs(n, m);
      neg_entropy += p * (std::log(p) - 1.0);
    }
  }
  return {linear + lambda * neg_entropy, linear, plan, total_iter};
}

SinkhornResult ctd_sinkhorn(const GaussianMixture& p, const GaussianMixture& q,
                            const CostSpec& cost, double lambda, int max_iter, double tol) {
  if (cost.kind == CostKind::SoftNLL) {
    throw ValidationError("ctd_sinkhorn: SoftNLL depends on reduced weights and is not a transport cost");
  }
  return sinkhorn(cost_matrix(p, q, cost), p.weights(), q.weights(), lambda, max_iter, tol);
}

double mixture_kl_1d(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() != 1 || q.dim() != 1) throw DimensionMismatch("mixture_kl_1d: mixtures must be 1-d");
  const Interval range = support_1d({&p, &q});
  const std::vector<double> knots = component_means_1d({&p, &q});
  const UnivariateMixture up(p), uq(q);
  const double value = integrate(
      [&](double t) {
        const double lp = up.log_density(t);
        if (!std::isfinite(lp)) return 0.0;
        return std::exp(lp) * (lp - uq.log_density(t));
      },
      range.lo, range.hi, knots);
  return std::max(value, 0.0);
}

namespace {

// CDF and survival function of a 1-d mixture.
struct Cdf1d {
  const GaussianMixture& mix;

  double lower(double x) const {
    double v = 0.0;
    for (std::size_t k = 0; k < mix.order(); ++k) {
      const double z = (x - mix.component(k).mean()(0)) / std::sqrt(mix.component(k).cov()(0, 0));
      v += mix.weight(k) * 0.5 * std::erfc(-z / std::numbers::sqrt2);
    }
    return v;
  }
  double upper(double x) const {
    double v = 0.0;
    for (std::size_t k = 0; k < mix.order(); ++k) {
      const double z = (x - mix.component(k).mean()(0)) / std::sqrt(mix.component(k).cov()(0, 0));
      v += mix.weight(k) * 0.5 * std::erfc(z / std::numbers::sqrt2);
    }
    return v;
  }
};

// Solves cdf_q(y) = u (u <= 1/2) or sf_q(y) = s (otherwise) by bisection.
double quantile(const Cdf1d& q, double u, double s, double lo, double hi) {
  const bool use_lower = u <= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = use_lower ? q.lower(mid) < u : q.upper(mid) > s;
    (below ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double mixture_w2_squared_1d(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() != 1 || q.dim() != 1) throw DimensionMismatch("mixture_w2_squared_1d: mixtures must be 1-d");
  const Interval range = support_1d({&p, &q});
  const double width = range.hi - range.lo;
  const Cdf1d fp{p}, fq{q};
  const std::vector<double> knots = component_means_1d({&p});
  const UnivariateMixture up(p);
  // W2^2 = \int (x - Q^{-1}(P(x)))^2 p(x) dx.
  const double value = integrate(
      [&](double t) {
        const double density_p = up.density(t);
        if (density_p == 0.0) return 0.0;
        const double y = quantile(fq, fp.lower(t), fp.upper(t), range.lo - width, range.hi + width);
        return (t - y) * (t - y) * density_p;
      },
      range.lo, range.hi, knots, 1e-10);
  return std::max(value, 0.0);
}

UpperBound upper_bound_check(const GaussianMixture& p, const GaussianMixture& q, CostKind cost) {
  double lhs = 0.0;
  CostSpec spec;
  switch (cost) {
    case CostKind::ISE:
      lhs = mixture_ise(p, q);
      spec = CostSpec::ise();
      break;
    case CostKind::KL:
      lhs = mixture_kl_1d(p, q);
      spec = CostSpec::kl();
      break;
    case CostKind::W2:
      lhs = mixture_w2_squared_1d(p, q);
      spec = CostSpec::w2();
      break;
    default:
      throw ValidationError("upper_bound_check: cost must be ise, kl or w2");
  }
  const double rhs = ctd_sinkhorn(p, q, spec, 1e-4).linear;
  return {lhs, rhs, lhs <= rhs + 1e-6};
}

}  // namespace mixred
