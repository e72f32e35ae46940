#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mixred/mixture.hpp"
#include "mixred/random.hpp"
#include "mixred/reduce.hpp"

namespace mixred {

/// Undirected edge with pairwise potential psi_ij(x, y) = N(x | y, 1 / precision).
struct Edge {
  int i;
  int j;
  double precision;
};

/// Pairwise graphical model with mixture node potentials.
class FactorGraph {
 public:
  FactorGraph(int nodes, std::vector<Edge> edges, std::vector<GaussianMixture> potentials);

  int nodes() const { return nodes_; }
  int dim() const { return potentials_.front().dim(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const GaussianMixture& potential(int i) const { return potentials_[static_cast<std::size_t>(i)]; }
  const std::vector<GaussianMixture>& potentials() const { return potentials_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }
  double precision(int i, int j) const;

  /// Number of directed messages, two per edge.
  std::size_t message_count() const { return 2 * edges_.size(); }
  /// Index of the directed message from -> to; throws if not an edge.
  std::size_t message_index(int from, int to) const;
  int message_source(std::size_t index) const;
  int message_target(std::size_t index) const;

 private:
  int nodes_;
  std::vector<Edge> edges_;
  std::vector<GaussianMixture> potentials_;
  std::vector<std::vector<int>> neighbors_;
};

/// The four-node, five-edge loopy graph with node potentials
/// w N(mu1, 1) + (1 - w) N(mu2, 1.5), w ~ U(0, 1), mu1 ~ U(-4, 0),
/// mu2 ~ U(0, 4), drawn node by node in that order.
FactorGraph four_node_graph(Rng& rng);

/// Directed messages; an empty slot is the unit message.
struct MessageSet {
  std::vector<std::optional<GaussianMixture>> messages;
  int iteration = 0;

  static MessageSet unit(const FactorGraph& graph) {
    return {std::vector<std::optional<GaussianMixture>>(graph.message_count()), 0};
  }
  const std::optional<GaussianMixture>& at(const FactorGraph& graph, int from, int to) const {
    return messages[graph.message_index(from, to)];
  }
};

/// A mixture scaled by exp(log_scale).
struct ScaledMixture {
  double log_scale;
  GaussianMixture mixture;

  double value(const Vector& x) const;
};

/// Pointwise product of two mixtures component by component, with its
/// total mass. Throws NumericalError when every product constant is below
/// 1e-300.
ScaledMixture mixture_product(const GaussianMixture& a, const GaussianMixture& b);

/// \int psi_ij(x_i, x_j) psi_j(x_j) prod_{k in N(j) \ i} m_kj(x_j) dx_j as
/// an unnormalized function of x_i.
ScaledMixture message_update_unnormalized(const FactorGraph& graph, const MessageSet& messages,
                                          int from, int to);

/// The same message with weights normalized.
GaussianMixture message_update(const FactorGraph& graph, const MessageSet& messages, int from,
                               int to);

/// psi_i prod_{j in N(i)} m_ji, normalized.
GaussianMixture belief_update(const FactorGraph& graph, const MessageSet& messages, int i);

/// Expected order of every message after a synchronous round, given the
/// orders of the previous round (0 encodes the unit message).
std::vector<std::size_t> predicted_message_orders(const FactorGraph& graph,
                                                  const std::vector<std::size_t>& previous);

struct BpOptions {
  int iterations = 3;
  /// When set, messages of order above reducer->M are reduced before the
  /// next round.
  std::optional<ReductionConfig> reducer;
  std::size_t order_cap = 1'000'000;
  double prune = 1e-12;    ///< weight below which components are dropped before reduction
  bool reverse_schedule = false;  ///< compute messages in reverse index order

  /// ISE cost, lambda = 0, 3 restarts, target order 4.
  static ReductionConfig default_reducer(std::uint64_t seed);
};

struct BpRound {
  std::vector<GaussianMixture> beliefs;
  /// Order of each directed message as computed, before any reduction.
  std::vector<std::size_t> raw_orders;
  /// Order of each directed message carried into the next round.
  std::vector<std::size_t> orders;
  MessageSet messages;
};

/// Synchronous belief propagation starting from unit messages. Round t
/// computes every message from the round t-1 messages, then the beliefs.
/// Without a reducer, throws NumericalError if any message or belief
/// would exceed order_cap components.
std::vector<BpRound> run_bp(const FactorGraph& graph, const BpOptions& options);

/// Per-round, per-node ISE between beliefs of two runs on the same graph.
std::vector<std::vector<double>> belief_ise(const std::vector<BpRound>& exact,
                                            const std::vector<BpRound>& approx);

}  // namespace mixred
