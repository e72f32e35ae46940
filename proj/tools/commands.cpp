#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mixred/bp.hpp"
#include "mixred/convexity.hpp"
#include "mixred/errors.hpp"
#include "mixred/io.hpp"
#include "mixred/reduce.hpp"
#include "mixred/simulate.hpp"

namespace mixred::cli {

namespace {

constexpr const char* kCsvVersion = "v1";

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_header(const std::string& command, const std::string& columns) {
  return "# mixred " + command + " csv " + kCsvVersion + "\n" + columns + "\n";
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw ValidationError("cannot write " + path);
  file << text;
}

CostSpec cost_from(const std::string& name, double inverse_temperature) {
  switch (parse_cost_kind(name)) {
    case CostKind::KL: return CostSpec::kl();
    case CostKind::ISE: return CostSpec::ise();
    case CostKind::CS: return CostSpec::cs();
    case CostKind::W2: return CostSpec::w2();
    case CostKind::SoftNLL: return CostSpec::soft_nll(inverse_temperature);
  }
  throw ValidationError("unknown cost");
}

// lo:hi:n
void parse_axis(const std::string& text, double& lo, double& hi, int& n) {
  std::istringstream in(text);
  std::string a, b, c;
  if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) ) {
    throw ValidationError("grid axis '" + text + "' must be lo:hi:n");
  }
  try {
    std::size_t used = 0;
    lo = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    hi = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    n = std::stoi(c, &used);
    if (used != c.size()) throw std::invalid_argument(c);
  } catch (const std::logic_error&) {
    throw ValidationError("grid axis '" + text + "' must be lo:hi:n");
  }
}

SurfaceGrid parse_grid(const std::string& text) {
  SurfaceGrid grid;
  if (text.empty()) return grid;
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("--grid must be mu_lo:mu_hi:n,sigma_lo:sigma_hi:n");
  parse_axis(text.substr(0, comma), grid.mu_lo, grid.mu_hi, grid.mu_n);
  parse_axis(text.substr(comma + 1), grid.sigma_lo, grid.sigma_hi, grid.sigma_n);
  grid.validate();
  return grid;
}

struct Options {
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> mixtures;
  std::size_t M = 5;
  std::string cost = "kl";
  double lambda = 0.0;
  double inverse_temperature = 1.0;
  int restarts = 10;
  int iters = 200;
  std::string graph = "paper4";
  std::string grid;
  std::string which = "ise";
  std::string csv;
  int trials = 1;
  unsigned threads = 1;
  std::vector<std::size_t> orders{5, 10, 15};
  std::vector<std::string> costs{"kl", "ise", "cs", "w2"};
};

void require_mixtures(const Options& o, std::size_t count, const char* command) {
  if (o.mixtures.size() != count) {
    throw ValidationError(std::string(command) + " needs " + std::to_string(count) + " --mixture file(s)");
  }
}

int cmd_simulate(const Options& o, std::ostream& out) {
  emit(to_json(simulate_mixture(o.seed)).dump(2) + "\n", o.out, out);
  return kExitOk;
}

int cmd_reduce(const Options& o, std::ostream& out) {
  require_mixtures(o, 1, "reduce");
  const GaussianMixture original = read_mixture(o.mixtures[0]);
  ReductionConfig cfg;
  cfg.M = o.M;
  cfg.cost = cost_from(o.cost, o.inverse_temperature);
  cfg.lambda = o.lambda;
  cfg.restarts = o.restarts;
  cfg.max_iter = o.iters;
  cfg.seed = o.seed;
  const auto start = std::chrono::steady_clock::now();
  const ReductionResult result = reduce(original, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double ise = mixture_ise(original, result.reduced);
  emit(to_json(result).dump(2) + "\n", o.out, out);
  if (!o.csv.empty()) {
    const bool fresh = !std::filesystem::exists(o.csv);
    std::ofstream file(o.csv, std::ios::app);
    if (!file) throw ValidationError("cannot write " + o.csv);
    if (fresh) {
      file << csv_header("reduce", "seed,M,cost,lambda,objective,ise,wall_seconds,iterations,status");
    }
    file << o.seed << ',' << o.M << ',' << to_string(cfg.cost.kind) << ',' << num(o.lambda) << ','
         << num(result.objective()) << ',' << num(ise) << ',' << num(seconds) << ','
         << result.iterations << ',' << to_string(result.status) << '\n';
  }
  return kExitOk;
}

int cmd_ctd(const Options& o, std::ostream& out) {
  require_mixtures(o, 2, "ctd");
  if (!(o.lambda > 0.0)) throw ValidationError("ctd requires --lambda > 0");
  const GaussianMixture p = read_mixture(o.mixtures[0]);
  const GaussianMixture q = read_mixture(o.mixtures[1]);
  const SinkhornResult r = ctd_sinkhorn(p, q, cost_from(o.cost, o.inverse_temperature), o.lambda);
  const Vector rows = r.plan.rowwise().sum();
  const Vector cols = r.plan.colwise().sum().transpose();
  double row_err = 0.0, col_err = 0.0;
  for (Eigen::Index n = 0; n < rows.size(); ++n) {
    row_err = std::max(row_err, std::abs(rows(n) - p.weight(static_cast<std::size_t>(n))));
  }
  for (Eigen::Index m = 0; m < cols.size(); ++m) {
    col_err = std::max(col_err, std::abs(cols(m) - q.weight(static_cast<std::size_t>(m))));
  }
  out << "value " << num(r.value) << "\nlinear " << num(r.linear) << "\nrow_marginal_error "
      << num(row_err) << "\ncol_marginal_error " << num(col_err) << '\n';
  if (!o.out.empty()) {
    std::string text = csv_header("ctd", "n,m,pi");
    for (Eigen::Index n = 0; n < r.plan.rows(); ++n) {
      for (Eigen::Index m = 0; m < r.plan.cols(); ++m) {
        text += std::to_string(n) + ',' + std::to_string(m) + ',' + num(r.plan(n, m)) + '\n';
      }
    }
    emit(text, o.out, out);
  }
  return kExitOk;
}

int cmd_bp(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.trials < 1) throw ValidationError("--trials must be >= 1");
  const bool builtin = o.graph == "paper4";
  std::optional<FactorGraph> file_graph;
  if (!builtin) file_graph = read_graph(o.graph);
  const CostSpec cost = cost_from(o.cost, o.inverse_temperature);
  std::string text = csv_header("bp", "trial,seed,iteration,node,exact_order,approx_order,ise");
  double exact_seconds = 0.0, approx_seconds = 0.0;
  for (int trial = 0; trial < o.trials; ++trial) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(trial);
    Rng rng(seed, kGraphStream);
    const FactorGraph graph = builtin ? four_node_graph(rng) : *file_graph;
    BpOptions exact_opts;
    exact_opts.iterations = o.iters;
    auto t0 = std::chrono::steady_clock::now();
    const auto exact = run_bp(graph, exact_opts);
    auto t1 = std::chrono::steady_clock::now();
    BpOptions approx_opts = exact_opts;
    ReductionConfig reducer = BpOptions::default_reducer(seed);
    reducer.M = o.M;
    reducer.cost = cost;
    reducer.lambda = cost.kind == CostKind::SoftNLL ? 1.0 : o.lambda;
    reducer.restarts = o.restarts;
    approx_opts.reducer = reducer;
    const auto approx = run_bp(graph, approx_opts);
    auto t2 = std::chrono::steady_clock::now();
    exact_seconds += std::chrono::duration<double>(t1 - t0).count();
    approx_seconds += std::chrono::duration<double>(t2 - t1).count();
    const auto ise = belief_ise(exact, approx);
    for (std::size_t t = 0; t < ise.size(); ++t) {
      for (std::size_t i = 0; i < ise[t].size(); ++i) {
        text += std::to_string(trial) + ',' + std::to_string(seed) + ',' + std::to_string(t + 1) + ',' +
                std::to_string(i) + ',' + std::to_string(exact[t].beliefs[i].order()) + ',' +
                std::to_string(approx[t].beliefs[i].order()) + ',' + num(ise[t][i]) + '\n';
      }
    }
  }
  emit(text, o.out, out);
  err << "bp: exact " << exact_seconds << " s, approximate " << approx_seconds << " s over "
      << o.trials << " trial(s)\n";
  return kExitOk;
}

int cmd_surface(const Options& o, std::ostream& out) {
  const SurfaceGrid grid = parse_grid(o.grid);
  std::string text = csv_header("surface", "mu,sigma,gap");
  for (const SurfacePoint& p : cs_saddle_surface(grid)) {
    text += num(p.mu) + ',' + num(p.sigma) + ',' + num(p.gap) + '\n';
  }
  emit(text, o.out, out);
  return kExitOk;
}

int cmd_divergence(const Options& o, std::ostream& out) {
  require_mixtures(o, 2, "divergence");
  const GaussianMixture p = read_mixture(o.mixtures[0]);
  const GaussianMixture q = read_mixture(o.mixtures[1]);
  const CostKind kind = parse_cost_kind(o.which);
  double value = 0.0;
  if (p.order() == 1 && q.order() == 1) {
    if (kind == CostKind::SoftNLL) throw ValidationError("divergence: softnll is not a divergence");
    value = component_cost(cost_from(o.which, 1.0), p.component(0), q.component(0));
  } else if (kind == CostKind::ISE) {
    value = mixture_ise(p, q);
  } else {
    throw ValidationError("divergence: '" + o.which +
                          "' needs single-component inputs; mixtures support ise only");
  }
  out << num(value) << '\n';
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  if (o.trials < 1) throw ValidationError("--trials must be >= 1");
  SweepConfig cfg;
  for (int s = 0; s < o.trials; ++s) cfg.seeds.push_back(o.seed + static_cast<std::uint64_t>(s));
  cfg.orders = o.orders;
  cfg.costs.clear();
  for (const std::string& c : o.costs) cfg.costs.push_back(parse_cost_kind(c));
  cfg.lambda = o.lambda;
  cfg.restarts = o.restarts;
  cfg.max_iter = o.iters;
  cfg.threads = o.threads;
  const std::vector<SweepRow> rows = run_sweep(cfg);
  std::string text = csv_header("sweep", "seed,M,cost,objective,ise,iterations,status");
  for (const SweepRow& r : rows) {
    text += std::to_string(r.seed) + ',' + std::to_string(r.M) + ',' + to_string(r.cost) + ',' +
            num(r.objective) + ',' + num(r.ise) + ',' + std::to_string(r.iterations) + ',' + r.status + '\n';
  }
  emit(text, o.out, out);
  if (!o.out.empty()) {
    for (const SweepSummary& s : summarize(rows)) {
      out << "M=" << s.M << " cost=" << to_string(s.cost) << " mean_ise=" << num(s.mean_ise) << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian mixture reduction by composite transportation divergence", "mixred"};
  app.require_subcommand(1);
  Options o;

  auto add_seed_out = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed for every random draw");
    sub->add_option("--out", o.out, "Output file (default: stdout)");
  };
  auto add_reduction = [&](CLI::App* sub) {
    sub->add_option("--cost", o.cost, "Component cost: kl|ise|cs|w2|softnll");
    sub->add_option("--lambda", o.lambda, "Entropic regularization strength")->check(CLI::NonNegativeNumber);
    sub->add_option("--I", o.inverse_temperature, "Inverse temperature of the softnll cost")
        ->check(CLI::PositiveNumber);
    sub->add_option("--restarts", o.restarts, "Number of EM initializations")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a 25-component 2-d mixture as JSON");
  add_seed_out(simulate);

  auto* reduce_cmd = app.add_subcommand("reduce", "Reduce a mixture; writes the ReductionResult JSON");
  add_seed_out(reduce_cmd);
  add_reduction(reduce_cmd);
  reduce_cmd->add_option("--mixture", o.mixtures, "Mixture JSON file")->required();
  reduce_cmd->add_option("--M", o.M, "Target order")->check(CLI::PositiveNumber);
  reduce_cmd->add_option("--iters", o.iters, "Maximum MM iterations")->check(CLI::NonNegativeNumber);
  reduce_cmd->add_option("--csv", o.csv,
                         "Append a row: seed,M,cost,lambda,objective,ise,wall_seconds,iterations,status");

  auto* ctd = app.add_subcommand("ctd", "Entropic transport divergence between two mixtures; --out gets the plan CSV (n,m,pi)");
  add_seed_out(ctd);
  ctd->add_option("--mixture", o.mixtures, "Two mixture JSON files")->required();
  ctd->add_option("--cost", o.cost, "Component cost: kl|ise|cs|w2");
  ctd->add_option("--lambda", o.lambda, "Regularization strength (> 0)");

  auto* bp = app.add_subcommand("bp", "Exact versus reduced belief propagation; CSV columns trial,seed,iteration,node,exact_order,approx_order,ise");
  add_seed_out(bp);
  add_reduction(bp);
  bp->add_option("--graph", o.graph, "Graph JSON file or 'paper4' for the built-in four-node graph");
  bp->add_option("--iters", o.iters, "Number of synchronous rounds")->check(CLI::NonNegativeNumber);
  bp->add_option("--M", o.M, "Order messages are reduced to")->check(CLI::PositiveNumber);
  bp->add_option("--trials", o.trials, "Number of trials, seeds seed..seed+trials-1");

  auto* surface = app.add_subcommand("surface", "CS convexity gap over a grid; CSV columns mu,sigma,gap");
  add_seed_out(surface);
  surface->add_option("--grid", o.grid, "mu_lo:mu_hi:n,sigma_lo:sigma_hi:n (default 0.1:3:30,0.3:3:28)");

  auto* divergence = app.add_subcommand("divergence", "Divergence between two mixture files");
  add_seed_out(divergence);
  divergence->add_option("--mixture", o.mixtures, "Two mixture JSON files")->required();
  divergence->add_option("--which", o.which, "kl|ise|cs|w2; mixtures with more than one component support ise");

  auto* sweep = app.add_subcommand("sweep", "Reduce simulated mixtures over seeds, orders and costs; CSV columns seed,M,cost,objective,ise,iterations,status");
  add_seed_out(sweep);
  sweep->add_option("--trials", o.trials, "Number of seeds, seed..seed+trials-1");
  sweep->add_option("--M", o.orders, "Target orders (repeatable)");
  sweep->add_option("--cost", o.costs, "Costs (repeatable)");
  sweep->add_option("--lambda", o.lambda, "Entropic regularization strength")->check(CLI::NonNegativeNumber);
  sweep->add_option("--restarts", o.restarts, "Number of EM initializations")->check(CLI::PositiveNumber);
  sweep->add_option("--iters", o.iters, "Maximum MM iterations")->check(CLI::NonNegativeNumber);
  sweep->add_option("--threads", o.threads, "Worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  if (bp->parsed()) {
    if (bp->count("--M") == 0) o.M = 4;
    if (bp->count("--cost") == 0) o.cost = "ise";
    if (bp->count("--restarts") == 0) o.restarts = 3;
    if (bp->count("--iters") == 0) o.iters = 3;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (reduce_cmd->parsed()) return cmd_reduce(o, out);
    if (ctd->parsed()) return cmd_ctd(o, out);
    if (bp->parsed()) return cmd_bp(o, out, err);
    if (surface->parsed()) return cmd_surface(o, out);
    if (divergence->parsed()) return cmd_divergence(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace mixred::cli
