#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mixred/bp.hpp"
#include "mixred/errors.hpp"
#include "mixred/simulate.hpp"
#include "oracles.hpp"

using namespace mixred;

namespace {

Gaussian g1d(double mean, double var) { return Gaussian::univariate(mean, var); }
Vector v1(double x) { return Vector::Constant(1, x); }

GaussianMixture two_bumps(double a, double b) {
  return GaussianMixture({0.3, 0.7}, {g1d(a, 1.0), g1d(b, 1.5)});
}

// Orders by direct counting: each message multiplies the source potential
// order by the orders of the other incoming messages.
std::vector<std::vector<std::size_t>> counted_orders(const FactorGraph& g, int rounds) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> prev(g.message_count(), 1);
  for (int t = 0; t < rounds; ++t) {
    std::vector<std::size_t> next(g.message_count());
    for (const Edge& e : g.edges()) {
      for (auto [from, to] : {std::pair{e.i, e.j}, std::pair{e.j, e.i}}) {
        std::size_t n = g.potential(from).order();
        for (const Edge& f : g.edges()) {
          if (f.j == from && f.i != to) n *= prev[g.message_index(f.i, from)];
          if (f.i == from && f.j != to) n *= prev[g.message_index(f.j, from)];
        }
        next[g.message_index(from, to)] = n;
      }
    }
    out.push_back(next);
    prev = next;
  }
  return out;
}

}  // namespace

TEST_CASE("factor graph structure") {
  Rng rng(1, kGraphStream);
  const FactorGraph g = four_node_graph(rng);
  CHECK(g.nodes() == 4);
  CHECK(g.edges().size() == 5);
  CHECK(g.message_count() == 10);
  CHECK(g.dim() == 1);
  CHECK(g.precision(0, 3) == 0.6);
  CHECK(g.precision(3, 0) == 0.6);
  CHECK(g.precision(2, 1) == 0.01);
  CHECK(g.neighbors(0).size() == 3);
  CHECK(g.neighbors(1).size() == 2);
  for (std::size_t idx = 0; idx < g.message_count(); ++idx) {
    CHECK(g.message_index(g.message_source(idx), g.message_target(idx)) == idx);
  }
  for (int i = 0; i < 4; ++i) {
    const GaussianMixture& p = g.potential(i);
    CHECK(p.order() == 2);
    CHECK(p.component(0).cov()(0, 0) == 1.0);
    CHECK(p.component(1).cov()(0, 0) == 1.5);
    CHECK(p.component(0).mean()(0) <= 0.0);
    CHECK(p.component(0).mean()(0) >= -4.0);
    CHECK(p.component(1).mean()(0) >= 0.0);
    CHECK(p.component(1).mean()(0) <= 4.0);
  }
  Rng again(1, kGraphStream);
  const FactorGraph h = four_node_graph(again);
  CHECK(parameter_distance(g.potential(2), h.potential(2)) == 0.0);
  CHECK_THROWS_AS(g.message_index(1, 3), ValidationError);
}

TEST_CASE("graph validation") {
  const std::vector<GaussianMixture> pots{two_bumps(0, 1), two_bumps(1, 2)};
  CHECK_THROWS_AS(FactorGraph(0, {}, {}), ValidationError);
  CHECK_THROWS_AS(FactorGraph(2, {{0, 1, 1.0}}, {two_bumps(0, 1)}), ValidationError);
  CHECK_THROWS_AS(FactorGraph(2, {{0, 2, 1.0}}, pots), ValidationError);
  CHECK_THROWS_AS(FactorGraph(2, {{1, 1, 1.0}}, pots), ValidationError);
  CHECK_THROWS_AS(FactorGraph(2, {{0, 1, 0.0}}, pots), ValidationError);
  CHECK_THROWS_AS(FactorGraph(2, {{0, 1, 1.0}, {1, 0, 2.0}}, pots), ValidationError);
  const std::vector<GaussianMixture> mixed{two_bumps(0, 1), GaussianMixture(Gaussian(Vector::Zero(2), Matrix::Identity(2, 2)))};
  CHECK_THROWS_AS(FactorGraph(2, {{0, 1, 1.0}}, mixed), DimensionMismatch);
}

TEST_CASE("mixture product") {
  const GaussianMixture a = two_bumps(-1.0, 2.0);
  const GaussianMixture b({0.6, 0.4}, {g1d(0.5, 0.7), g1d(3.0, 2.0)});
  const ScaledMixture p = mixture_product(a, b);
  CHECK(p.mixture.order() == 4);
  for (double x : {-3.0, -1.0, 0.0, 0.4, 2.5, 5.0}) {
    const double direct = density(a, v1(x)) * density(b, v1(x));
    CHECK(p.value(v1(x)) == doctest::Approx(direct).epsilon(1e-12));
  }
  const auto oa = testing_support::to_1d(a), ob = testing_support::to_1d(b);
  CHECK(std::exp(p.log_scale) == doctest::Approx(oracle::inner(oa, ob)).epsilon(1e-10));

  const GaussianMixture far_a(g1d(-1e3, 1e-2)), far_b(g1d(1e3, 1e-2));
  CHECK_THROWS_AS(mixture_product(far_a, far_b), NumericalError);
  CHECK_THROWS_AS(mixture_product(a, GaussianMixture(Gaussian(Vector::Zero(2), Matrix::Identity(2, 2)))),
                  DimensionMismatch);
}

TEST_CASE("leaf message") {
  const double tau = 0.4;
  const FactorGraph g(2, {{0, 1, tau}}, {two_bumps(-1.0, 2.0), two_bumps(0.0, 1.0)});
  const MessageSet unit = MessageSet::unit(g);
  const ScaledMixture m = message_update_unnormalized(g, unit, 0, 1);
  CHECK(std::abs(m.log_scale) <= 1e-14);
  REQUIRE(m.mixture.order() == 2);
  CHECK(m.mixture.weight(0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(m.mixture.component(0).mean()(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(m.mixture.component(0).cov()(0, 0) == doctest::Approx(1.0 + 1.0 / tau).epsilon(1e-14));
  CHECK(m.mixture.component(1).cov()(0, 0) == doctest::Approx(1.5 + 1.0 / tau).epsilon(1e-14));

  // a single-Gaussian potential and single-Gaussian incoming message give one
  // Gaussian scaled by the overlap of the two
  const FactorGraph chain(3, {{0, 1, 1.0}, {1, 2, 0.5}},
                          {GaussianMixture(g1d(0, 1)), GaussianMixture(g1d(1.0, 2.0)), GaussianMixture(g1d(0, 1))});
  MessageSet ms = MessageSet::unit(chain);
  ms.messages[chain.message_index(0, 1)] = GaussianMixture(g1d(-0.5, 3.0));
  const ScaledMixture s = message_update_unnormalized(chain, ms, 1, 2);
  REQUIRE(s.mixture.order() == 1);
  const double c = oracle::normal_pdf(1.0, -0.5, 5.0);
  CHECK(std::exp(s.log_scale) == doctest::Approx(c).epsilon(1e-13));
  const double post_var = 1.0 / (1.0 / 2.0 + 1.0 / 3.0);
  const double post_mean = post_var * (1.0 / 2.0 - 0.5 / 3.0);
  CHECK(s.mixture.component(0).mean()(0) == doctest::Approx(post_mean).epsilon(1e-13));
  CHECK(s.mixture.component(0).cov()(0, 0) == doctest::Approx(post_var + 2.0).epsilon(1e-13));
}

TEST_CASE("unnormalized message against quadrature") {
  const FactorGraph g(3, {{0, 1, 0.6}, {1, 2, 0.2}}, {two_bumps(-2, 1), two_bumps(-1, 3), two_bumps(0, 2)});
  MessageSet ms = MessageSet::unit(g);
  const GaussianMixture incoming({0.5, 0.5}, {g1d(-1.0, 2.0), g1d(1.5, 0.8)});
  ms.messages[g.message_index(0, 1)] = incoming;
  const ScaledMixture m = message_update_unnormalized(g, ms, 1, 2);
  CHECK(m.mixture.order() == 4);
  const auto pot = testing_support::to_1d(g.potential(1));
  const auto inc = testing_support::to_1d(incoming);
  for (int k = 0; k < 20; ++k) {
    const double xi = -6.0 + 0.6 * k;
    const oracle::Mixture1d kernel{{1.0, xi, 1.0 / 0.2}};
    const double direct = oracle::integrate_over({&pot, &inc, &kernel}, [&](double xj) {
      return oracle::normal_pdf(xi, xj, 1.0 / 0.2) * oracle::mixture_pdf(pot, xj) * oracle::mixture_pdf(inc, xj);
    });
    CHECK(m.value(v1(xi)) == doctest::Approx(direct).epsilon(1e-8));
  }
  CHECK(parameter_distance(message_update(g, ms, 1, 2), m.mixture) == 0.0);
}

TEST_CASE("beliefs") {
  Rng rng(3, kGraphStream);
  const FactorGraph g = four_node_graph(rng);
  BpOptions opt;
  opt.iterations = 2;
  const auto rounds = run_bp(g, opt);
  REQUIRE(rounds.size() == 2);
  for (int i = 0; i < 4; ++i) {
    const GaussianMixture& b = rounds[1].beliefs[static_cast<std::size_t>(i)];
    ScaledMixture direct{0.0, g.potential(i)};
    for (int j : g.neighbors(i)) {
      ScaledMixture next = mixture_product(direct.mixture, *rounds[1].messages.at(g, j, i));
      next.log_scale += direct.log_scale;
      direct = next;
    }
    double ratio0 = 0.0;
    for (double x : {-3.0, -1.0, 0.0, 1.5, 3.0}) {
      double prod = density(g.potential(i), v1(x));
      for (int j : g.neighbors(i)) prod *= density(*rounds[1].messages.at(g, j, i), v1(x));
      const double ratio = density(b, v1(x)) / prod;
      if (ratio0 == 0.0) ratio0 = ratio;
      CHECK(ratio == doctest::Approx(ratio0).epsilon(1e-9));
      CHECK(density(direct.mixture, v1(x)) == doctest::Approx(density(b, v1(x))).epsilon(1e-12));
    }
    const auto ob = testing_support::to_1d(b);
    const oracle::Support sup = oracle::support_of({&ob});
    std::vector<double> grid;
    for (double x = std::floor(sup.lo); x < sup.hi; x += 0.5) grid.push_back(x);
    const double mass = oracle::integrate([&](double x) { return oracle::mixture_pdf(ob, x); }, sup.lo, sup.hi, grid);
    CHECK(std::abs(mass - 1.0) <= 1e-8);
    double total = 0.0;
    for (double w : b.weights()) total += w;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("exact orders follow the recurrence") {
  Rng rng(4, kGraphStream);
  const FactorGraph g = four_node_graph(rng);
  const auto expected = counted_orders(g, 3);
  BpOptions opt;
  opt.iterations = 3;
  const auto rounds = run_bp(g, opt);
  std::vector<std::size_t> prev(g.message_count(), 0);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(rounds[t].raw_orders == expected[t]);
    CHECK(rounds[t].orders == expected[t]);
    CHECK(predicted_message_orders(g, prev) == expected[t]);
    prev = rounds[t].orders;
    for (int i = 0; i < 4; ++i) {
      std::size_t order = 2;
      for (int j : g.neighbors(i)) order *= expected[t][g.message_index(j, i)];
      CHECK(rounds[t].beliefs[static_cast<std::size_t>(i)].order() == order);
    }
  }
  CHECK(expected[0] == std::vector<std::size_t>(10, 2));
  CHECK(*std::max_element(expected[2].begin(), expected[2].end()) == 64);

  BpOptions capped;
  capped.iterations = 3;
  capped.order_cap = 100;
  CHECK_THROWS_AS(run_bp(g, capped), NumericalError);
  BpOptions negative;
  negative.iterations = -1;
  CHECK_THROWS_AS(run_bp(g, negative), ValidationError);
  CHECK_THROWS_AS(predicted_message_orders(g, {1, 2}), ValidationError);
}

TEST_CASE("reduced messages stay small") {
  Rng rng(5, kGraphStream);
  const FactorGraph g = four_node_graph(rng);
  BpOptions opt;
  opt.iterations = 4;
  opt.reducer = BpOptions::default_reducer(9);
  CHECK(opt.reducer->M == 4);
  CHECK(opt.reducer->cost.kind == CostKind::ISE);
  const auto rounds = run_bp(g, opt);
  std::vector<std::size_t> prev(g.message_count(), 0);
  for (const BpRound& r : rounds) {
    for (std::size_t idx = 0; idx < g.message_count(); ++idx) CHECK(r.orders[idx] <= 4);
    CHECK(r.raw_orders == predicted_message_orders(g, prev));
    prev = r.orders;
    for (const auto& b : r.beliefs) {
      double total = 0.0;
      for (double w : b.weights()) total += w;
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
  const auto again = run_bp(g, opt);
  CHECK(parameter_distance(again[3].beliefs[0], rounds[3].beliefs[0]) == 0.0);
}

TEST_CASE("synchronous schedule does not depend on message order") {
  Rng rng(6, kGraphStream);
  const FactorGraph g = four_node_graph(rng);
  BpOptions fwd;
  fwd.iterations = 3;
  fwd.reducer = BpOptions::default_reducer(2);
  BpOptions rev = fwd;
  rev.reverse_schedule = true;
  const auto a = run_bp(g, fwd), b = run_bp(g, rev);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < 4; ++i) CHECK(parameter_distance(a[t].beliefs[i], b[t].beliefs[i]) == 0.0);
  }
  const auto ise = belief_ise(a, b);
  for (const auto& row : ise) {
    for (double v : row) CHECK(std::abs(v) <= 1e-12);
  }
}
