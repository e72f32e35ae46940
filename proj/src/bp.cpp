#include "mixred/bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mixred/errors.hpp"

namespace mixred {

FactorGraph::FactorGraph(int nodes, std::vector<Edge> edges, std::vector<GaussianMixture> potentials)
    : nodes_(nodes), edges_(std::move(edges)), potentials_(std::move(potentials)) {
  if (nodes_ < 1) throw ValidationError("FactorGraph: need at least one node");
  if (potentials_.size() != static_cast<std::size_t>(nodes_)) {
    throw ValidationError("FactorGraph: one potential per node required");
  }
  for (const GaussianMixture& p : potentials_) {
    if (p.dim() != potentials_.front().dim()) throw DimensionMismatch("FactorGraph: potentials differ in dimension");
  }
  neighbors_.assign(static_cast<std::size_t>(nodes_), {});
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= nodes_ || e.j >= nodes_) {
      throw ValidationError("FactorGraph: edge endpoint out of range");
    }
    if (e.i == e.j) throw ValidationError("FactorGraph: self loops are not allowed");
    if (!(e.precision > 0.0) || !std::isfinite(e.precision)) {
      throw ValidationError("FactorGraph: edge precisions must be positive");
    }
    if (!seen.insert({std::min(e.i, e.j), std::max(e.i, e.j)}).second) {
      throw ValidationError("FactorGraph: duplicate edge");
    }
    neighbors_[static_cast<std::size_t>(e.i)].push_back(e.j);
    neighbors_[static_cast<std::size_t>(e.j)].push_back(e.i);
  }
  for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

double FactorGraph::precision(int i, int j) const {
  return edges_[message_index(i, j) / 2].precision;
}

std::size_t FactorGraph::message_index(int from, int to) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].i == from && edges_[e].j == to) return 2 * e;
    if (edges_[e].j == from && edges_[e].i == to) return 2 * e + 1;
  }
  throw ValidationError("FactorGraph: no edge between " + std::to_string(from) + " and " +
                        std::to_string(to));
}

int FactorGraph::message_source(std::size_t index) const {
  const Edge& e = edges_.at(index / 2);
  return index % 2 == 0 ? e.i : e.j;
}

int FactorGraph::message_target(std::size_t index) const {
  const Edge& e = edges_.at(index / 2);
  return index % 2 == 0 ? e.j : e.i;
}

FactorGraph four_node_graph(Rng& rng) {
  std::vector<GaussianMixture> potentials;
  for (int i = 0; i < 4; ++i) {
    const double w = rng.uniform();
    const double mu1 = rng.uniform(-4.0, 0.0);
    const double mu2 = rng.uniform(0.0, 4.0);
    potentials.emplace_back(std::vector<double>{w, 1.0 - w},
                            std::vector<Gaussian>{Gaussian::univariate(mu1, 1.0),
                                                  Gaussian::univariate(mu2, 1.5)});
  }
  std::vector<Edge> edges{{0, 3, 0.6}, {0, 2, 0.4}, {1, 0, 0.2}, {2, 1, 0.01}, {3, 2, 0.8}};
  return FactorGraph(4, std::move(edges), std::move(potentials));
}

double ScaledMixture::value(const Vector& x) const {
  return std::exp(log_scale + log_density(mixture, x));
}

namespace {

constexpr double kLogUnderflow = -690.7755278982137;  // log(1e-300)

ScaledMixture from_log_weights(const std::vector<double>& log_w, std::vector<Gaussian> comps) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!(top >= kLogUnderflow)) {
    throw NumericalError("mixture product: every component constant underflowed");
  }
  double total = 0.0;
  for (double lw : log_w) total += std::exp(lw - top);
  const double log_scale = top + std::log(total);
  std::vector<double> weights(log_w.size());
  for (std::size_t k = 0; k < log_w.size(); ++k) weights[k] = std::exp(log_w[k] - log_scale);
  return {log_scale, GaussianMixture(std::move(weights), std::move(comps))};
}

double safe_log(double w) { return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity(); }

ScaledMixture product_scaled(const ScaledMixture& a, const GaussianMixture& b) {
  ScaledMixture p = mixture_product(a.mixture, b);
  p.log_scale += a.log_scale;
  return p;
}

ScaledMixture node_times_incoming(const FactorGraph& graph, const MessageSet& messages, int node,
                                  int exclude) {
  ScaledMixture acc{0.0, graph.potential(node)};
  for (int k : graph.neighbors(node)) {
    if (k == exclude) continue;
    const auto& m = messages.at(graph, k, node);
    if (m) acc = product_scaled(acc, *m);
  }
  return acc;
}

GaussianMixture prune(const GaussianMixture& mix, double threshold) {
  std::vector<double> w;
  std::vector<Gaussian> c;
  for (std::size_t k = 0; k < mix.order(); ++k) {
    if (mix.weight(k) >= threshold) {
      w.push_back(mix.weight(k));
      c.push_back(mix.component(k));
    }
  }
  if (w.size() == mix.order()) return mix;
  return GaussianMixture(std::move(w), std::move(c));
}

std::size_t belief_order(const FactorGraph& graph, const std::vector<std::size_t>& orders, int i) {
  std::size_t order = graph.potential(i).order();
  for (int j : graph.neighbors(i)) order *= std::max<std::size_t>(1, orders[graph.message_index(j, i)]);
  return order;
}

}  // namespace

ScaledMixture mixture_product(const GaussianMixture& a, const GaussianMixture& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("mixture_product: dimensions differ");
  std::vector<double> log_w;
  std::vector<Gaussian> comps;
  log_w.reserve(a.order() * b.order());
  comps.reserve(a.order() * b.order());
  for (std::size_t p = 0; p < a.order(); ++p) {
    for (std::size_t q = 0; q < b.order(); ++q) {
      GaussianProduct g = product(a.component(p), b.component(q));
      log_w.push_back(safe_log(a.weight(p)) + safe_log(b.weight(q)) + g.log_norm_const);
      comps.push_back(std::move(g.gaussian));
    }
  }
  return from_log_weights(log_w, std::move(comps));
}

ScaledMixture message_update_unnormalized(const FactorGraph& graph, const MessageSet& messages,
                                          int from, int to) {
  const double precision = graph.precision(from, to);
  ScaledMixture acc = node_times_incoming(graph, messages, from, to);
  const int d = graph.dim();
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix kernel_cov = eye / precision;
  const Vector zero = Vector::Zero(d);
  std::vector<Gaussian> comps;
  comps.reserve(acc.mixture.order());
  for (const Gaussian& g : acc.mixture.components()) {
    comps.push_back(marginalize_affine(eye, zero, kernel_cov, g));
  }
  return {acc.log_scale, GaussianMixture(acc.mixture.weights(), std::move(comps))};
}

GaussianMixture message_update(const FactorGraph& graph, const MessageSet& messages, int from,
                               int to) {
  return message_update_unnormalized(graph, messages, from, to).mixture;
}

GaussianMixture belief_update(const FactorGraph& graph, const MessageSet& messages, int i) {
  return node_times_incoming(graph, messages, i, -1).mixture;
}

std::vector<std::size_t> predicted_message_orders(const FactorGraph& graph,
                                                  const std::vector<std::size_t>& previous) {
  if (previous.size() != graph.message_count()) throw ValidationError("predicted orders: size mismatch");
  std::vector<std::size_t> next(graph.message_count());
  for (std::size_t idx = 0; idx < next.size(); ++idx) {
    const int j = graph.message_source(idx), i = graph.message_target(idx);
    std::size_t order = graph.potential(j).order();
    for (int k : graph.neighbors(j)) {
      if (k != i) order *= std::max<std::size_t>(1, previous[graph.message_index(k, j)]);
    }
    next[idx] = order;
  }
  return next;
}

ReductionConfig BpOptions::default_reducer(std::uint64_t seed) {
  ReductionConfig cfg;
  cfg.M = 4;
  cfg.cost = CostSpec::ise();
  cfg.lambda = 0.0;
  cfg.restarts = 3;
  cfg.seed = seed;
  return cfg;
}

std::vector<BpRound> run_bp(const FactorGraph& graph, const BpOptions& options) {
  if (options.iterations < 0) throw ValidationError("run_bp: iterations must be >= 0");
  if (options.reducer) options.reducer->validate();
  MessageSet current = MessageSet::unit(graph);
  std::vector<std::size_t> orders(graph.message_count(), 0);
  std::vector<BpRound> rounds;
  for (int t = 1; t <= options.iterations; ++t) {
    const std::vector<std::size_t> predicted = predicted_message_orders(graph, orders);
    if (!options.reducer) {
      for (std::size_t idx = 0; idx < predicted.size(); ++idx) {
        if (predicted[idx] > options.order_cap) {
          throw NumericalError("run_bp: message order " + std::to_string(predicted[idx]) +
                               " exceeds the cap in round " + std::to_string(t));
        }
      }
      for (int i = 0; i < graph.nodes(); ++i) {
        if (belief_order(graph, predicted, i) > options.order_cap) {
          throw NumericalError("run_bp: belief order exceeds the cap in round " + std::to_string(t));
        }
      }
    }
    BpRound round;
    round.messages = MessageSet::unit(graph);
    round.messages.iteration = t;
    round.raw_orders.assign(graph.message_count(), 0);
    round.orders.assign(graph.message_count(), 0);
    const std::size_t count = graph.message_count();
    for (std::size_t step = 0; step < count; ++step) {
      const std::size_t idx = options.reverse_schedule ? count - 1 - step : step;
      GaussianMixture msg =
          message_update(graph, current, graph.message_source(idx), graph.message_target(idx));
      round.raw_orders[idx] = msg.order();
      if (options.reducer && msg.order() > options.reducer->M) {
        msg = prune(msg, options.prune);
        if (msg.order() > options.reducer->M) {
          ReductionConfig cfg = *options.reducer;
          cfg.seed = Rng::splitmix64(options.reducer->seed ^
                                     Rng::splitmix64(static_cast<std::uint64_t>(t) * count + idx));
          msg = reduce(msg, cfg).reduced;
        }
      }
      round.orders[idx] = msg.order();
      round.messages.messages[idx] = std::move(msg);
    }
    for (int i = 0; i < graph.nodes(); ++i) round.beliefs.push_back(belief_update(graph, round.messages, i));
    current = round.messages;
    orders = round.orders;
    rounds.push_back(std::move(round));
  }
  return rounds;
}

std::vector<std::vector<double>> belief_ise(const std::vector<BpRound>& exact,
                                            const std::vector<BpRound>& approx) {
  const std::size_t rounds = std::min(exact.size(), approx.size());
  std::vector<std::vector<double>> out(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    if (exact[t].beliefs.size() != approx[t].beliefs.size()) {
      throw ValidationError("belief_ise: runs have different node counts");
    }
    for (std::size_t i = 0; i < exact[t].beliefs.size(); ++i) {
      const GaussianMixture& p = exact[t].beliefs[i];
      out[t].push_back(mixture_ise(p, self_l2_inner(p), approx[t].beliefs[i]));
    }
  }
  return out;
}

}  // namespace mixred
