#include "mixred/io.hpp"

#include <cmath>
#include <fstream>

#include "mixred/errors.hpp"

namespace mixred {

namespace {

const Json& field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string(what) + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) throw ValidationError(std::string(what) + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite number");
  return v;
}

Vector vector_from(const Json& j, int d, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw ValidationError(std::string(what) + ": expected an array of length " + std::to_string(d));
  }
  Vector v(d);
  for (int k = 0; k < d; ++k) v(k) = number(j[static_cast<std::size_t>(k)], what);
  return v;
}

}  // namespace

Json to_json(const GaussianMixture& mix) {
  Json comps = Json::array();
  for (const Gaussian& g : mix.components()) {
    Json cov = Json::array();
    for (int r = 0; r < g.dim(); ++r) {
      Json row = Json::array();
      for (int c = 0; c < g.dim(); ++c) row.push_back(g.cov()(r, c));
      cov.push_back(row);
    }
    Json mean = Json::array();
    for (int k = 0; k < g.dim(); ++k) mean.push_back(g.mean()(k));
    comps.push_back({{"mean", mean}, {"cov", cov}});
  }
  return {{"dim", mix.dim()}, {"weights", mix.weights()}, {"components", comps}};
}

GaussianMixture mixture_from_json(const Json& j) {
  const Json& dim_j = field(j, "dim", "mixture");
  if (!dim_j.is_number_integer() || dim_j.get<int>() < 1) {
    throw ValidationError("mixture: 'dim' must be a positive integer");
  }
  const int d = dim_j.get<int>();
  const Json& weights_j = field(j, "weights", "mixture");
  const Json& comps_j = field(j, "components", "mixture");
  if (!weights_j.is_array() || !comps_j.is_array() || weights_j.size() != comps_j.size() ||
      weights_j.empty()) {
    throw ValidationError("mixture: 'weights' and 'components' must be non-empty arrays of equal length");
  }
  std::vector<double> weights;
  double total = 0.0;
  for (const Json& w : weights_j) {
    weights.push_back(number(w, "mixture weight"));
    total += weights.back();
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError("mixture: weights sum to " + std::to_string(total) + ", expected 1");
  }
  std::vector<Gaussian> comps;
  for (const Json& c : comps_j) {
    const Vector mean = vector_from(field(c, "mean", "component"), d, "component mean");
    const Json& cov_j = field(c, "cov", "component");
    if (!cov_j.is_array() || static_cast<int>(cov_j.size()) != d) {
      throw ValidationError("component cov: expected " + std::to_string(d) + " rows");
    }
    Matrix cov(d, d);
    for (int r = 0; r < d; ++r) cov.row(r) = vector_from(cov_j[static_cast<std::size_t>(r)], d, "component cov").transpose();
    try {
      comps.emplace_back(mean, cov);
    } catch (const NumericalError& e) {
      throw ValidationError(std::string("component cov: ") + e.what());
    }
  }
  return GaussianMixture(std::move(weights), std::move(comps));
}

Json to_json(const TransportPlan& plan) {
  Json rows = Json::array();
  for (Eigen::Index n = 0; n < plan.rows(); ++n) {
    Json row = Json::array();
    for (Eigen::Index m = 0; m < plan.cols(); ++m) row.push_back(plan(n, m));
    rows.push_back(row);
  }
  return rows;
}

Json to_json(const ReductionResult& result) {
  return {{"reduced", to_json(result.reduced)},
          {"objective_trace", result.objective_trace},
          {"iterations", result.iterations},
          {"status", to_string(result.status)},
          {"plan", to_json(result.plan)}};
}

Json to_json(const FactorGraph& graph) {
  Json edges = Json::array();
  for (const Edge& e : graph.edges()) edges.push_back({{"i", e.i}, {"j", e.j}, {"precision", e.precision}});
  Json potentials = Json::array();
  for (const GaussianMixture& p : graph.potentials()) potentials.push_back(to_json(p));
  return {{"nodes", graph.nodes()}, {"edges", edges}, {"potentials", potentials}};
}

FactorGraph graph_from_json(const Json& j) {
  const Json& nodes_j = field(j, "nodes", "graph");
  if (!nodes_j.is_number_integer()) throw ValidationError("graph: 'nodes' must be an integer");
  const Json& edges_j = field(j, "edges", "graph");
  const Json& pots_j = field(j, "potentials", "graph");
  if (!edges_j.is_array() || !pots_j.is_array()) {
    throw ValidationError("graph: 'edges' and 'potentials' must be arrays");
  }
  std::vector<Edge> edges;
  for (const Json& e : edges_j) {
    const Json& i = field(e, "i", "edge");
    const Json& jj = field(e, "j", "edge");
    if (!i.is_number_integer() || !jj.is_number_integer()) {
      throw ValidationError("edge: endpoints must be integers");
    }
    edges.push_back({i.get<int>(), jj.get<int>(), number(field(e, "precision", "edge"), "edge precision")});
  }
  std::vector<GaussianMixture> potentials;
  for (const Json& p : pots_j) potentials.push_back(mixture_from_json(p));
  return FactorGraph(nodes_j.get<int>(), std::move(edges), std::move(potentials));
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

GaussianMixture read_mixture(const std::filesystem::path& path) {
  return mixture_from_json(read_json_file(path));
}

FactorGraph read_graph(const std::filesystem::path& path) { return graph_from_json(read_json_file(path)); }

}  // namespace mixred
