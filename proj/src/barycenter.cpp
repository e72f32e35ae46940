#include "mixred/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "mixred/errors.hpp"

namespace mixred {

void FixedPointConfig::validate() const {
  if (max_iter < 1) throw ValidationError("FixedPointConfig: max_iter must be positive");
  if (!(tol > 0.0)) throw ValidationError("FixedPointConfig: tol must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("FixedPointConfig: damping must be in (0, 1]");
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kExitGradientTol = 1e-5;

// Barycenter inputs with zero weights dropped and weights normalized.
struct Terms {
  std::vector<const Gaussian*> g;
  std::vector<double> lam;
  int dim = 0;
};

Terms make_terms(std::span<const Gaussian> comps, std::span<const double> lambdas) {
  if (comps.empty()) throw ValidationError("barycenter: no components");
  if (comps.size() != lambdas.size()) throw ValidationError("barycenter: lambda count mismatch");
  Terms t;
  t.dim = comps.front().dim();
  double total = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (comps[k].dim() != t.dim) throw DimensionMismatch("barycenter: components differ in dimension");
    if (!(lambdas[k] >= 0.0) || !std::isfinite(lambdas[k])) {
      throw ValidationError("barycenter: lambdas must be finite and nonnegative");
    }
    if (lambdas[k] == 0.0) continue;
    t.g.push_back(&comps[k]);
    t.lam.push_back(lambdas[k]);
    total += lambdas[k];
  }
  if (!(total > 0.0)) throw ValidationError("barycenter: lambdas sum to zero");
  for (double& l : t.lam) l /= total;
  return t;
}

Gaussian moment_match(const Terms& t) {
  Vector weighted = Vector::Zero(t.dim);
  double total = 0.0;
  for (std::size_t k = 0; k < t.g.size(); ++k) {
    weighted += t.lam[k] * t.g[k]->mean();
    total += t.lam[k];
  }
  const Vector mean = weighted / total;
  Matrix cov = Matrix::Zero(t.dim, t.dim);
  for (std::size_t k = 0; k < t.g.size(); ++k) {
    const Vector diff = t.g[k]->mean() - mean;
    cov += t.lam[k] * (t.g[k]->cov() + diff * diff.transpose());
  }
  return Gaussian(mean, symmetrized(cov / total));
}

// Objective value and its gradient with respect to (mean, Sigma), where the
// Sigma gradient G satisfies df = tr(G dSigma) for symmetric dSigma.
struct Evaluation {
  double value;
  Vector grad_mean;
  Matrix grad_cov;
};

Evaluation evaluate_ise(const Terms& t, const Vector& mu, const Matrix& sigma) {
  const double d = static_cast<double>(t.dim);
  const double k = std::exp(-0.5 * d * std::log(4.0 * std::numbers::pi));
  const SpdFactor fs(sigma);
  const double self = k * std::exp(-0.5 * fs.log_det());
  Evaluation e{0.0, Vector::Zero(t.dim), Matrix::Zero(t.dim, t.dim)};
  const Matrix sigma_inv = fs.inverse();
  for (std::size_t n = 0; n < t.g.size(); ++n) {
    const Gaussian& gn = *t.g[n];
    const SpdFactor fb(gn.cov() + sigma);
    const Vector delta = gn.mean() - mu;
    const double phi = std::exp(-0.5 * (d * kLog2Pi + fb.log_det() + fb.inverse_quadratic(delta)));
    const Matrix b_inv = fb.inverse();
    const Vector b_delta = b_inv * delta;
    e.value += t.lam[n] * (k * std::exp(-0.5 * gn.log_det()) + self - 2.0 * phi);
    e.grad_mean -= t.lam[n] * 2.0 * phi * b_delta;
    e.grad_cov += t.lam[n] * (-0.5 * self * sigma_inv + phi * (b_inv - b_delta * b_delta.transpose()));
  }
  e.grad_cov = symmetrized(e.grad_cov);
  return e;
}

Evaluation evaluate_cs(const Terms& t, const Vector& mu, const Matrix& sigma) {
  const double d = static_cast<double>(t.dim);
  const double log4pi = std::log(4.0 * std::numbers::pi);
  const SpdFactor fs(sigma);
  const Matrix sigma_inv = fs.inverse();
  Evaluation e{0.0, Vector::Zero(t.dim), Matrix::Zero(t.dim, t.dim)};
  for (std::size_t n = 0; n < t.g.size(); ++n) {
    const Gaussian& gn = *t.g[n];
    const SpdFactor fb(gn.cov() + sigma);
    const Vector delta = gn.mean() - mu;
    const double log_phi = -0.5 * (d * kLog2Pi + fb.log_det() + fb.inverse_quadratic(delta));
    const Matrix b_inv = fb.inverse();
    const Vector b_delta = b_inv * delta;
    e.value += t.lam[n] * (-log_phi - 0.25 * ((d * log4pi + gn.log_det()) + (d * log4pi + fs.log_det())));
    e.grad_mean -= t.lam[n] * b_delta;
    e.grad_cov += t.lam[n] * (0.5 * (b_inv - b_delta * b_delta.transpose()) - 0.25 * sigma_inv);
  }
  e.grad_cov = symmetrized(e.grad_cov);
  return e;
}

using Evaluator = Evaluation (*)(const Terms&, const Vector&, const Matrix&);

// Parameter vector: mean, then lower-triangular Cholesky entries in
// column-major order with the diagonal stored as a logarithm.
int param_count(int d) { return d + d * (d + 1) / 2; }

Vector pack(const Vector& mu, const Matrix& sigma) {
  const int d = static_cast<int>(mu.size());
  const Matrix l = SpdFactor(sigma).lower();
  Vector theta(param_count(d));
  theta.head(d) = mu;
  int idx = d;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) theta(idx++) = i == j ? std::log(l(i, i)) : l(i, j);
  }
  return theta;
}

void unpack(const Vector& theta, int d, Vector& mu, Matrix& lower) {
  mu = theta.head(d);
  lower = Matrix::Zero(d, d);
  int idx = d;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) lower(i, j) = i == j ? std::exp(theta(idx++)) : theta(idx++);
  }
}

Vector chain_gradient(const Evaluation& e, const Matrix& lower) {
  const int d = static_cast<int>(lower.rows());
  const Matrix dl = 2.0 * e.grad_cov * lower;
  Vector g(param_count(d));
  g.head(d) = e.grad_mean;
  int idx = d;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) g(idx++) = i == j ? dl(i, i) * lower(i, i) : dl(i, j);
  }
  return g;
}

// Gradient in the (mean, lower-triangular Sigma entries) coordinates used by
// the finite-difference check.
double natural_gradient_norm(const Evaluation& e) {
  const int d = static_cast<int>(e.grad_mean.size());
  double sq = e.grad_mean.squaredNorm();
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      const double gij = i == j ? e.grad_cov(i, i) : 2.0 * e.grad_cov(i, j);
      sq += gij * gij;
    }
  }
  return std::sqrt(sq);
}

struct DescentResult {
  Vector mu;
  Matrix sigma;
  bool converged;
  int iterations;
};

std::optional<std::pair<Evaluation, Matrix>> try_evaluate(Evaluator eval, const Terms& t,
                                                          const Vector& theta) {
  Vector mu;
  Matrix lower;
  unpack(theta, t.dim, mu, lower);
  if (!mu.allFinite() || !lower.allFinite()) return std::nullopt;
  try {
    Evaluation e = eval(t, mu, lower * lower.transpose());
    if (!std::isfinite(e.value)) return std::nullopt;
    return std::make_pair(std::move(e), std::move(lower));
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

// Monotone gradient descent with Barzilai-Borwein trial steps and Armijo
// backtracking (at most 50 halvings per step).
DescentResult descend(Evaluator eval, const Terms& t, const Vector& mu0, const Matrix& sigma0,
                      int max_iter, double grad_tol) {
  Vector theta = pack(mu0, sigma0);
  auto current = try_evaluate(eval, t, theta);
  if (!current) throw NumericalError("barycenter descent: objective undefined at start");
  Vector grad = chain_gradient(current->first, current->second);
  double step = 1.0 / std::max(1.0, grad.norm());
  Vector prev_theta, prev_grad;
  bool converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (natural_gradient_norm(current->first) <= grad_tol) {
      converged = true;
      break;
    }
    if (it > 0) {
      const Vector s = theta - prev_theta;
      const Vector y = grad - prev_grad;
      const double sy = s.dot(y);
      step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
    }
    const double f0 = current->first.value;
    const double g2 = grad.squaredNorm();
    bool accepted = false;
    for (int halving = 0; halving <= 50; ++halving, step *= 0.5) {
      const Vector trial = theta - step * grad;
      auto next = try_evaluate(eval, t, trial);
      if (next && next->first.value <= f0 - 1e-4 * step * g2) {
        prev_theta = theta;
        prev_grad = grad;
        theta = trial;
        current = std::move(next);
        grad = chain_gradient(current->first, current->second);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease is representable from here; either stationary to
      // rounding or a genuine line-search failure.
      converged = natural_gradient_norm(current->first) <= kExitGradientTol;
      break;
    }
  }
  const Matrix& lower = current->second;
  Vector mu = theta.head(t.dim);
  return {mu, symmetrized(lower * lower.transpose()), converged, it};
}

double terms_objective(const Terms& t, const CostSpec& cost, const Gaussian& g) {
  double total = 0.0;
  for (std::size_t n = 0; n < t.g.size(); ++n) total += t.lam[n] * component_cost(cost, *t.g[n], g);
  return total;
}

Vector gradient_fd(const std::function<double(const Gaussian&)>& f, const Gaussian& g,
                   double rel_step) {
  const int d = g.dim();
  Vector grad(param_count(d));
  int idx = 0;
  auto eval_at = [&](const Vector& mu, const Matrix& sigma) { return f(Gaussian(mu, sigma)); };
  for (int i = 0; i < d; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(g.mean()(i)));
    Vector up = g.mean(), down = g.mean();
    up(i) += h;
    down(i) -= h;
    grad(idx++) = (eval_at(up, g.cov()) - eval_at(down, g.cov())) / (2.0 * h);
  }
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      const double h = rel_step * std::max(1.0, std::abs(g.cov()(i, j)));
      Matrix up = g.cov(), down = g.cov();
      up(i, j) += h;
      down(i, j) -= h;
      if (i != j) {
        up(j, i) += h;
        down(j, i) -= h;
      }
      grad(idx++) = (eval_at(g.mean(), up) - eval_at(g.mean(), down)) / (2.0 * h);
    }
  }
  return grad;
}

double terms_gradient_norm(const Terms& t, const CostSpec& cost, const Gaussian& g) {
  return gradient_fd([&](const Gaussian& x) { return terms_objective(t, cost, x); }, g, 1e-5).norm();
}

Gaussian kl_solution(const Terms& t) { return moment_match(t); }

// The moment-matched Gaussian, or `warm` when it has a lower objective.
Gaussian starting_point(const Terms& t, const CostSpec& cost, const Gaussian* warm) {
  Gaussian start = moment_match(t);
  if (warm != nullptr && warm->dim() == t.dim &&
      terms_objective(t, cost, *warm) < terms_objective(t, cost, start)) {
    return *warm;
  }
  return start;
}

BarycenterSolution cs_solution(const Terms& t, const FixedPointConfig& cfg, const Gaussian* warm) {
  cfg.validate();
  const Gaussian start = starting_point(t, CostSpec::cs(), warm);
  if (t.g.size() == 1) return {*t.g.front(), true, 0};
  const int d = t.dim;
  const Matrix eye = Matrix::Identity(d, d);
  Vector mu = start.mean();
  Matrix sigma = start.cov();
  bool fixed_point_converged = false;
  int it = 0;
  try {
    for (; it < cfg.max_iter; ++it) {
      std::vector<Matrix> b_inv(t.g.size());
      Matrix a = Matrix::Zero(d, d);
      Vector rhs = Vector::Zero(d);
      for (std::size_t n = 0; n < t.g.size(); ++n) {
        b_inv[n] = SpdFactor(t.g[n]->cov() + sigma).inverse();
        a += t.lam[n] * b_inv[n];
        rhs += t.lam[n] * b_inv[n] * t.g[n]->mean();
      }
      const Vector mu_new = SpdFactor(a).solve(rhs);
      Matrix r = Matrix::Zero(d, d);
      for (std::size_t n = 0; n < t.g.size(); ++n) {
        const Vector delta = t.g[n]->mean() - mu_new;
        r += 2.0 * t.lam[n] * b_inv[n] * (eye - delta * delta.transpose() * b_inv[n]);
      }
      r = symmetrized(r);
      const Matrix precision = SpdFactor(sigma).inverse();
      double alpha = cfg.damping;
      std::optional<SpdFactor> next;
      for (int attempt = 0; attempt <= 10 && !next; ++attempt, alpha *= 0.5) {
        const Matrix candidate = symmetrized((1.0 - alpha) * precision + alpha * r);
        Eigen::LLT<Matrix> llt(candidate);
        if (llt.info() == Eigen::Success) next.emplace(candidate);
      }
      if (!next) throw NotPositiveDefinite("cs_barycenter: covariance update lost positive definiteness");
      const Matrix sigma_new = next->inverse();
      const double change = (mu_new - mu).norm() + (sigma_new - sigma).norm();
      mu = mu_new;
      sigma = sigma_new;
      if (change <= cfg.tol * (1.0 + sigma.norm())) {
        fixed_point_converged = true;
        ++it;
        break;
      }
    }
  } catch (const NumericalError&) {
    mu = start.mean();
    sigma = start.cov();
  }
  if (fixed_point_converged) {
    Gaussian g(mu, sigma);
    if (terms_gradient_norm(t, CostSpec::cs(), g) <= kExitGradientTol) return {std::move(g), true, it};
  }
  const DescentResult polished = descend(&evaluate_cs, t, mu, sigma, cfg.max_iter, 1e-9);
  Gaussian g(polished.mu, polished.sigma);
  if (terms_gradient_norm(t, CostSpec::cs(), g) > kExitGradientTol) {
    throw NonConvergence("cs_barycenter: no stationary point found within max_iter");
  }
  return {std::move(g), true, it + polished.iterations};
}

BarycenterSolution ise_solution(const Terms& t, const FixedPointConfig& cfg, const Gaussian* warm) {
  cfg.validate();
  if (t.g.size() == 1) return {*t.g.front(), true, 0};
  const Gaussian start = starting_point(t, CostSpec::ise(), warm);
  const DescentResult r = descend(&evaluate_ise, t, start.mean(), start.cov(), cfg.max_iter, 1e-9);
  Gaussian g(r.mu, r.sigma);
  bool ok = r.converged;
  if (ok) ok = terms_gradient_norm(t, CostSpec::ise(), g) <= kExitGradientTol;
  return {std::move(g), ok, r.iterations};
}

BarycenterSolution w2_solution(const Terms& t, const FixedPointConfig& cfg, const Gaussian* warm) {
  cfg.validate();
  if (t.g.size() == 1) return {*t.g.front(), true, 0};
  const int d = t.dim;
  Vector mean = Vector::Zero(d);
  for (std::size_t n = 0; n < t.g.size(); ++n) mean += t.lam[n] * t.g[n]->mean();
  Matrix s = starting_point(t, CostSpec::w2(), warm).cov();
  auto step = [&](const Matrix& current) {
    const Matrix root = sqrtm_psd(current);
    const Matrix root_inv = inv_sqrtm_spd(current);
    Matrix avg = Matrix::Zero(d, d);
    for (std::size_t n = 0; n < t.g.size(); ++n) {
      avg += t.lam[n] * sqrtm_psd(symmetrized(root * t.g[n]->cov() * root));
    }
    avg = symmetrized(avg);
    return symmetrized(root_inv * avg * avg * root_inv);
  };
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Matrix next = step(s);
    const double change = (next - s).norm();
    s = next;
    if (change <= cfg.tol * (1.0 + s.norm())) return {Gaussian(mean, s), true, it + 1};
  }
  throw NonConvergence("w2_barycenter: fixed point did not converge within max_iter");
}

BarycenterSolution dispatch(const Terms& t, const CostSpec& cost, const FixedPointConfig& cfg,
                            const Gaussian* warm = nullptr) {
  switch (cost.kind) {
    case CostKind::KL:
    case CostKind::SoftNLL:
      return {kl_solution(t), true, 0};
    case CostKind::CS:
      return cs_solution(t, cfg, warm);
    case CostKind::ISE:
      return ise_solution(t, cfg, warm);
    case CostKind::W2:
      return w2_solution(t, cfg, warm);
  }
  throw ValidationError("barycenter: unknown cost");
}

Terms terms_of(const BarycenterProblem& prob) { return make_terms(prob.components, prob.lambdas); }

void require_cost(const BarycenterProblem& prob, CostKind kind, const char* what) {
  if (prob.cost.kind != kind) throw ValidationError(std::string(what) + ": cost kind mismatch");
}

}  // namespace

Gaussian kl_barycenter(const BarycenterProblem& prob) {
  if (prob.cost.kind != CostKind::KL && prob.cost.kind != CostKind::SoftNLL) {
    throw ValidationError("kl_barycenter: cost kind mismatch");
  }
  return kl_solution(terms_of(prob));
}

BarycenterSolution cs_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg) {
  require_cost(prob, CostKind::CS, "cs_barycenter");
  return cs_solution(terms_of(prob), cfg, nullptr);
}

BarycenterSolution ise_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg) {
  require_cost(prob, CostKind::ISE, "ise_barycenter");
  return ise_solution(terms_of(prob), cfg, nullptr);
}

BarycenterSolution w2_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg) {
  require_cost(prob, CostKind::W2, "w2_barycenter");
  return w2_solution(terms_of(prob), cfg, nullptr);
}

BarycenterSolution solve_barycenter(const BarycenterProblem& prob, const FixedPointConfig& cfg) {
  return dispatch(terms_of(prob), prob.cost, cfg);
}

BarycenterSolution solve_barycenter(std::span<const Gaussian> components,
                                    std::span<const double> lambdas, const CostSpec& cost,
                                    const FixedPointConfig& cfg, const Gaussian* warm_start) {
  return dispatch(make_terms(components, lambdas), cost, cfg, warm_start);
}

double barycenter_objective(const BarycenterProblem& prob, const Gaussian& g) {
  if (prob.components.size() != prob.lambdas.size()) {
    throw ValidationError("barycenter_objective: lambda count mismatch");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < prob.components.size(); ++n) {
    if (prob.lambdas[n] == 0.0) continue;
    total += prob.lambdas[n] * component_cost(prob.cost, prob.components[n], g);
  }
  return total;
}

Vector barycenter_gradient_fd(const BarycenterProblem& prob, const Gaussian& g, double rel_step) {
  return gradient_fd([&](const Gaussian& x) { return barycenter_objective(prob, x); }, g, rel_step);
}

}  // namespace mixred
