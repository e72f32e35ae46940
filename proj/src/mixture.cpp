#include "mixred/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mixred/errors.hpp"

namespace mixred {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(const double* values, std::size_t n) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) top = std::max(top, values[k]);
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::exp(values[k] - top);
  return top + std::log(acc);
}

// Lexicographic order on the flattened parameters; used to make pairwise
// sums independent of argument order.
bool canonical_less(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.order() != q.order()) return p.order() < q.order();
  for (std::size_t k = 0; k < p.order(); ++k) {
    if (p.weight(k) != q.weight(k)) return p.weight(k) < q.weight(k);
  }
  for (std::size_t k = 0; k < p.order(); ++k) {
    const auto& a = p.component(k);
    const auto& b = q.component(k);
    for (int i = 0; i < a.dim(); ++i) {
      if (a.mean()(i) != b.mean()(i)) return a.mean()(i) < b.mean()(i);
    }
    for (int i = 0; i < a.cov().size(); ++i) {
      if (a.cov().data()[i] != b.cov().data()[i]) return a.cov().data()[i] < b.cov().data()[i];
    }
  }
  return false;
}

struct Scalars {
  std::vector<double> w, mu, var;
};

Scalars univariate_parameters(const GaussianMixture& m) {
  Scalars s;
  s.w = m.weights();
  s.mu.reserve(m.order());
  s.var.reserve(m.order());
  for (const auto& g : m.components()) {
    s.mu.push_back(g.mean()(0));
    s.var.push_back(g.cov()(0, 0));
  }
  return s;
}

inline double overlap_1d(double mu_a, double var_a, double mu_b, double var_b) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const double s = var_a + var_b;
  const double d = mu_a - mu_b;
  return kInvSqrt2Pi * std::exp(-0.5 * d * d / s) / std::sqrt(s);
}

double cross_inner(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() == 1) {
    const Scalars a = univariate_parameters(p);
    const Scalars b = univariate_parameters(q);
    double total = 0.0;
    for (std::size_t n = 0; n < a.w.size(); ++n) {
      if (a.w[n] == 0.0) continue;
      double row = 0.0;
      for (std::size_t m = 0; m < b.w.size(); ++m) {
        row += b.w[m] * overlap_1d(a.mu[n], a.var[n], b.mu[m], b.var[m]);
      }
      total += a.w[n] * row;
    }
    return total;
  }
  double total = 0.0;
  for (std::size_t n = 0; n < p.order(); ++n) {
    if (p.weight(n) == 0.0) continue;
    double row = 0.0;
    for (std::size_t m = 0; m < q.order(); ++m) {
      row += q.weight(m) * std::exp(log_overlap(p.component(n), q.component(m)));
    }
    total += p.weight(n) * row;
  }
  return total;
}

double self_inner(const GaussianMixture& p) {
  if (p.dim() == 1) {
    const Scalars a = univariate_parameters(p);
    const auto n_comp = static_cast<Eigen::Index>(a.w.size());
    const Eigen::Map<const Eigen::ArrayXd> w(a.w.data(), n_comp);
    const Eigen::Map<const Eigen::ArrayXd> mu(a.mu.data(), n_comp);
    const Eigen::Map<const Eigen::ArrayXd> var(a.var.data(), n_comp);
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const double diag = (w.square() / (2.0 * var).sqrt()).sum();
    double off = 0.0;
    for (Eigen::Index n = 0; n + 1 < n_comp; ++n) {
      const Eigen::Index len = n_comp - n - 1;
      const Eigen::ArrayXd s = var.tail(len) + var[n];
      off += w[n] * (w.tail(len) * (-0.5 * (mu.tail(len) - mu[n]).square() / s).exp() / s.sqrt()).sum();
    }
    return kInvSqrt2Pi * (diag + 2.0 * off);
  }
  double diag = 0.0, off = 0.0;
  for (std::size_t n = 0; n < p.order(); ++n) {
    if (p.weight(n) == 0.0) continue;
    diag += p.weight(n) * p.weight(n) *
            std::exp(log_overlap(p.component(n), p.component(n)));
    double row = 0.0;
    for (std::size_t m = n + 1; m < p.order(); ++m) {
      row += p.weight(m) * std::exp(log_overlap(p.component(n), p.component(m)));
    }
    off += p.weight(n) * row;
  }
  return diag + 2.0 * off;
}

void require_same_dim(const GaussianMixture& p, const GaussianMixture& q, const char* what) {
  if (p.dim() != q.dim()) throw DimensionMismatch(std::string(what) + ": dimension mismatch");
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("GaussianMixture: no components");
  if (weights_.size() != components_.size()) {
    throw ValidationError("GaussianMixture: weight count does not match component count");
  }
  const int d = components_.front().dim();
  for (const auto& g : components_) {
    if (g.dim() != d) throw DimensionMismatch("GaussianMixture: components differ in dimension");
  }
  double total = 0.0;
  for (double& w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("GaussianMixture: weights must be finite and nonnegative");
    }
    if (w < kWeightFloor) w = 0.0;
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("GaussianMixture: weights sum to zero");
  if (std::abs(total - 1.0) > 1e-12) {
    for (double& w : weights_) w /= total;
  }
}

GaussianMixture::GaussianMixture(Gaussian single)
    : GaussianMixture(std::vector<double>{1.0}, std::vector<Gaussian>{std::move(single)}) {}

double log_density(const GaussianMixture& mix, const Vector& x) {
  std::vector<double> terms;
  terms.reserve(mix.order());
  for (std::size_t k = 0; k < mix.order(); ++k) {
    if (mix.weight(k) == 0.0) continue;
    terms.push_back(std::log(mix.weight(k)) + log_density(mix.component(k), x));
  }
  return log_sum_exp(terms.data(), terms.size());
}

double density(const GaussianMixture& mix, const Vector& x) { return std::exp(log_density(mix, x)); }

double l2_inner(const GaussianMixture& p, const GaussianMixture& q) {
  require_same_dim(p, q, "l2_inner");
  return canonical_less(q, p) ? cross_inner(q, p) : cross_inner(p, q);
}

double self_l2_inner(const GaussianMixture& p) { return self_inner(p); }

double mixture_ise(const GaussianMixture& p, const GaussianMixture& q) {
  require_same_dim(p, q, "mixture_ise");
  return (self_inner(p) + self_inner(q)) - 2.0 * l2_inner(p, q);
}

double mixture_ise(const GaussianMixture& p, double p_self_inner, const GaussianMixture& q) {
  require_same_dim(p, q, "mixture_ise");
  return (p_self_inner + self_inner(q)) - 2.0 * l2_inner(p, q);
}

Gaussian moment_match(const GaussianMixture& mix) {
  const int d = mix.dim();
  Vector mean = Vector::Zero(d);
  for (std::size_t k = 0; k < mix.order(); ++k) mean += mix.weight(k) * mix.component(k).mean();
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < mix.order(); ++k) {
    const Vector diff = mix.component(k).mean() - mean;
    cov += mix.weight(k) * (mix.component(k).cov() + diff * diff.transpose());
  }
  return Gaussian(mean, symmetrized(cov));
}

std::vector<Vector> sample(const GaussianMixture& mix, std::size_t n, Rng& rng) {
  std::vector<Vector> out;
  out.reserve(n);
  const int d = mix.dim();
  Vector z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = mix.component(rng.categorical(mix.weights()));
    for (int j = 0; j < d; ++j) z(j) = rng.normal();
    out.push_back(g.mean() + g.factor().lower() * z);
  }
  return out;
}

double log_likelihood(const GaussianMixture& mix, const std::vector<Vector>& samples) {
  double total = 0.0;
  for (const auto& x : samples) total += log_density(mix, x);
  return total;
}

namespace {

Matrix as_columns(const std::vector<Vector>& samples) {
  const int d = static_cast<int>(samples.front().size());
  Matrix x(d, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != d) throw DimensionMismatch("fit_em: samples differ in dimension");
    x.col(static_cast<Eigen::Index>(i)) = samples[i];
  }
  return x;
}

Matrix sample_covariance(const Matrix& x) {
  const Vector mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - mean;
  return symmetrized(centered * centered.transpose() / static_cast<double>(x.cols()));
}

// Fills `log_resp` (K x n) with responsibilities in log space and returns the
// sample log-likelihood.
double e_step(const GaussianMixture& mix, const Matrix& x, Matrix& log_resp) {
  const auto n = x.cols();
  const auto k_count = static_cast<Eigen::Index>(mix.order());
  log_resp.resize(k_count, n);
  const double d = static_cast<double>(x.rows());
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto& g = mix.component(static_cast<std::size_t>(k));
    const double w = mix.weight(static_cast<std::size_t>(k));
    if (w == 0.0) {
      log_resp.row(k).setConstant(-std::numeric_limits<double>::infinity());
      continue;
    }
    const Matrix centered = x.colwise() - g.mean();
    const Matrix z = g.factor().lower().triangularView<Eigen::Lower>().solve(centered);
    const double offset = std::log(w) - 0.5 * (d * kLog2Pi + g.log_det());
    log_resp.row(k) = (offset - 0.5 * z.colwise().squaredNorm().array()).matrix();
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lse = log_sum_exp(log_resp.col(i).data(), static_cast<std::size_t>(k_count));
    log_resp.col(i).array() -= lse;
    total += lse;
  }
  return total;
}

}  // namespace

EmFit fit_em(const std::vector<Vector>& samples, const GaussianMixture& init,
             const EmOptions& options, Rng& rng) {
  const std::size_t order = init.order();
  if (samples.empty()) throw ValidationError("fit_em: no samples");
  const int d = static_cast<int>(samples.front().size());
  if (d != init.dim()) throw DimensionMismatch("fit_em: samples and init differ in dimension");
  if (samples.size() < order * static_cast<std::size_t>(d + 1)) {
    throw ValidationError("fit_em: need at least M*(d+1) samples");
  }
  const Matrix x = as_columns(samples);
  const auto n = x.cols();
  Matrix global_cov = sample_covariance(x);
  try {
    SpdFactor check(global_cov);
  } catch (const NumericalError&) {
    global_cov = Matrix::Identity(d, d);
  }

  Matrix log_resp;
  GaussianMixture mix = init;
  double ll = e_step(mix, x, log_resp);
  EmFit fit{mix, {ll}, 0, false, 0};

  for (int it = 1; it <= options.max_iter; ++it) {
    const Matrix resp = log_resp.array().exp().matrix();
    std::vector<double> weights(order);
    std::vector<Gaussian> comps;
    comps.reserve(order);
    for (std::size_t k = 0; k < order; ++k) {
      const auto row = resp.row(static_cast<Eigen::Index>(k));
      const double mass = row.sum();
      bool collapsed = mass < 1e-8;
      if (!collapsed) {
        const Vector mean = x * row.transpose() / mass;
        const Matrix centered = x.colwise() - mean;
        const Matrix cov =
            symmetrized(centered * row.asDiagonal() * centered.transpose() / mass);
        try {
          comps.emplace_back(mean, cov);
          weights[k] = mass / static_cast<double>(n);
        } catch (const NumericalError&) {
          collapsed = true;
        }
      }
      if (collapsed) {
        const auto pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        comps.emplace_back(Vector(x.col(pick)), global_cov);
        weights[k] = 1.0 / static_cast<double>(order);
        ++fit.reseeds;
      }
    }
    mix = GaussianMixture(std::move(weights), std::move(comps));
    const double ll_new = e_step(mix, x, log_resp);
    fit.log_likelihood.push_back(ll_new);
    fit.iterations = it;
    const bool done = std::abs(ll_new - ll) <= options.tol * std::abs(ll);
    ll = ll_new;
    if (done) {
      fit.converged = true;
      break;
    }
  }
  fit.mixture = std::move(mix);
  return fit;
}

GaussianMixture kmeanspp_init(const std::vector<Vector>& samples, std::size_t order, Rng& rng) {
  if (order == 0) throw ValidationError("kmeanspp_init: order must be positive");
  if (samples.size() < order) throw ValidationError("kmeanspp_init: fewer samples than components");
  const Matrix x = as_columns(samples);
  const auto n = x.cols();
  const int d = static_cast<int>(x.rows());
  Matrix cov = sample_covariance(x);
  try {
    SpdFactor check(cov);
  } catch (const NumericalError&) {
    cov = Matrix::Identity(d, d);
  }

  std::vector<Vector> centers;
  centers.emplace_back(x.col(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)))));
  std::vector<double> dist2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  while (centers.size() < order) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& di = dist2[static_cast<std::size_t>(i)];
      di = std::min(di, (x.col(i) - centers.back()).squaredNorm());
      total += di;
    }
    Eigen::Index pick;
    if (total > 0.0) {
      pick = static_cast<Eigen::Index>(rng.categorical(dist2));
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.emplace_back(x.col(pick));
  }
  std::vector<Gaussian> comps;
  comps.reserve(order);
  for (auto& c : centers) comps.emplace_back(std::move(c), cov);
  return GaussianMixture(std::vector<double>(order, 1.0 / static_cast<double>(order)),
                         std::move(comps));
}

EmFit fit_em(const std::vector<Vector>& samples, std::size_t order, const EmOptions& options,
             Rng& rng) {
  const GaussianMixture init = kmeanspp_init(samples, order, rng);
  return fit_em(samples, init, options, rng);
}

}  // namespace mixred
