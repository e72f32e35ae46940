#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mixred/errors.hpp"
#include "mixred/expfam.hpp"
#include "mixred/random.hpp"
#include "oracles.hpp"

using namespace mixred;

namespace {

// Densities written from the textbook parameterizations.
struct Ref {
  Family family;
  double p;  // exponential rate or rayleigh sigma

  double log_pdf(double x) const {
    if (family == Family::Exponential) return std::log(p) - p * x;
    return std::log(x) - 2.0 * std::log(p) - x * x / (2.0 * p * p);
  }
  double pdf(double x) const { return std::exp(log_pdf(x)); }
  double upper() const { return family == Family::Exponential ? 80.0 / p : 14.0 * p; }
  ExpFamilyMember member() const {
    return family == Family::Exponential ? ExpFamilyMember::exponential(p) : ExpFamilyMember::rayleigh(p);
  }
};

std::vector<double> cuts(const Ref& a, const Ref& b) {
  std::vector<double> c;
  for (const Ref* r : {&a, &b}) {
    const double s = r->family == Family::Exponential ? 1.0 / r->p : r->p;
    for (double k : {0.5, 1.0, 2.0, 4.0, 8.0}) c.push_back(k * s);
  }
  return c;
}

double quad_kl(const Ref& a, const Ref& b) {
  const double hi = std::max(a.upper(), b.upper());
  return oracle::integrate([&](double x) { return a.pdf(x) * (a.log_pdf(x) - b.log_pdf(x)); }, 0.0, hi, cuts(a, b));
}

double quad_ise(const Ref& a, const Ref& b) {
  const double hi = std::max(a.upper(), b.upper());
  return oracle::integrate([&](double x) { return std::pow(a.pdf(x) - b.pdf(x), 2); }, 0.0, hi, cuts(a, b));
}

}  // namespace

TEST_CASE("parameterizations") {
  const auto e = ExpFamilyMember::exponential(2.0);
  CHECK(e.theta() == -2.0);
  CHECK(e.mean_param() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.density(0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(e.density(-1.0) == 0.0);
  const auto r = ExpFamilyMember::rayleigh(1.5);
  CHECK(r.theta() == doctest::Approx(-0.5 / 2.25).epsilon(1e-15));
  CHECK(r.mean_param() == doctest::Approx(2.0 * 2.25).epsilon(1e-14));
  CHECK(r.density(0.0) == 0.0);
  for (double x : {0.1, 1.0, 3.0}) {
    CHECK(e.log_density(x) == doctest::Approx(Ref{Family::Exponential, 2.0}.log_pdf(x)).epsilon(1e-14));
    CHECK(r.log_density(x) == doctest::Approx(Ref{Family::Rayleigh, 1.5}.log_pdf(x)).epsilon(1e-14));
  }
  for (const Ref ref : {Ref{Family::Exponential, 0.7}, Ref{Family::Rayleigh, 2.3}}) {
    const double mass = oracle::integrate([&](double x) { return ref.member().density(x); }, 0.0, ref.upper(),
                                          cuts(ref, ref));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    const auto& f = ref.member().interface();
    const double mean_h = oracle::integrate(
        [&](double x) { return f.base_measure(x) * ref.pdf(x); }, 0.0, ref.upper(), cuts(ref, ref));
    CHECK(f.h_expectation(ref.member().theta()) == doctest::Approx(mean_h).epsilon(1e-10));
    const double mean_t = oracle::integrate(
        [&](double x) { return f.statistic(x) * ref.pdf(x); }, 0.0, ref.upper(), cuts(ref, ref));
    CHECK(ref.member().mean_param() == doctest::Approx(mean_t).epsilon(1e-10));
  }
  CHECK(to_string(Family::Exponential) == "exponential");
  CHECK(to_string(Family::Rayleigh) == "rayleigh");
}

TEST_CASE("mean parameter is the derivative of log A") {
  Rng rng(61);
  for (Family family : {Family::Exponential, Family::Rayleigh}) {
    const FamilyInterface& f = family_interface(family);
    for (int k = 0; k < 100; ++k) {
      const double theta = -rng.uniform(0.05, 10.0);
      const double h = 1e-5 * std::abs(theta);
      const double fd = (f.log_partition(theta + h) - f.log_partition(theta - h)) / (2.0 * h);
      CHECK(std::abs(fd - f.mean_param(theta)) <= 1e-6 * std::max(1.0, std::abs(f.mean_param(theta))));
      CHECK(f.mean_param_inverse(f.mean_param(theta)) == doctest::Approx(theta).epsilon(1e-14));
      CHECK(std::log(f.partition(theta)) == doctest::Approx(f.log_partition(theta)).epsilon(1e-14));
    }
  }
  CHECK(FamilyInterface::in_natural_space(-1.0));
  CHECK_FALSE(FamilyInterface::in_natural_space(0.0));
  CHECK_FALSE(FamilyInterface::in_natural_space(-INFINITY));
  CHECK(FamilyInterface::in_mean_space(2.0));
  CHECK_FALSE(FamilyInterface::in_mean_space(-2.0));
}

TEST_CASE("kl and ise against quadrature") {
  Rng rng(62);
  for (Family family : {Family::Exponential, Family::Rayleigh}) {
    for (int k = 0; k < 25; ++k) {
      const Ref a{family, rng.uniform(0.3, 3.0)}, b{family, rng.uniform(0.3, 3.0)};
      CHECK(std::abs(expfam_kl(a.member(), b.member()) - quad_kl(a, b)) <= 1e-8);
      CHECK(std::abs(expfam_ise(a.member(), b.member()) - quad_ise(a, b)) <= 1e-8);
    }
    const auto m = Ref{family, 1.3}.member();
    CHECK(expfam_kl(m, m) == 0.0);
    CHECK(expfam_ise(m, m) <= 1e-15);
  }
  // closed form for exponentials: log(r1/r2) + r2/r1 - 1
  const double v = expfam_kl(ExpFamilyMember::exponential(2.0), ExpFamilyMember::exponential(0.5));
  CHECK(v == doctest::Approx(std::log(4.0) + 0.25 - 1.0).epsilon(1e-14));
  CHECK_THROWS_AS(expfam_kl(ExpFamilyMember::exponential(1.0), ExpFamilyMember::rayleigh(1.0)), ValidationError);
  CHECK_THROWS_AS(expfam_ise(ExpFamilyMember::exponential(1.0), ExpFamilyMember::rayleigh(1.0)), ValidationError);
}

TEST_CASE("kl barycenter") {
  const std::vector<ExpFamilyMember> two{ExpFamilyMember::exponential(1.0), ExpFamilyMember::exponential(3.0)};
  const std::vector<double> halves{0.5, 0.5};
  CHECK(-expfam_kl_barycenter(two, halves).theta() == doctest::Approx(1.5).epsilon(1e-14));
  const std::vector<double> scaled{4.0, 4.0};
  CHECK(expfam_kl_barycenter(two, scaled) == expfam_kl_barycenter(two, halves));
  const std::vector<double> one_zero{1.0, 0.0};
  CHECK(expfam_kl_barycenter(two, one_zero) == two[0]);

  Rng rng(63);
  for (Family family : {Family::Exponential, Family::Rayleigh}) {
    for (int k = 0; k < 10; ++k) {
      std::vector<Ref> refs;
      std::vector<ExpFamilyMember> members;
      std::vector<double> lambdas;
      for (int n = 0; n < 3; ++n) {
        refs.push_back({family, rng.uniform(0.4, 2.5)});
        members.push_back(refs.back().member());
        lambdas.push_back(rng.uniform(0.1, 1.0));
      }
      auto total = [&](double p) {
        double s = 0.0;
        for (int n = 0; n < 3; ++n) s += lambdas[static_cast<std::size_t>(n)] * quad_kl(refs[static_cast<std::size_t>(n)], Ref{family, p});
        return s;
      };
      const double p_star = oracle::golden_minimize(total, 0.2, 5.0, 1e-10);
      const double theta_star = Ref{family, p_star}.member().theta();
      const double theta = expfam_kl_barycenter(members, lambdas).theta();
      CHECK(std::abs(theta - theta_star) <= 1e-6 * std::max(1.0, std::abs(theta_star)));
    }
  }

  const std::vector<ExpFamilyMember> mixed{ExpFamilyMember::exponential(1.0), ExpFamilyMember::rayleigh(1.0)};
  CHECK_THROWS_AS(expfam_kl_barycenter(mixed, halves), ValidationError);
  const std::vector<double> zeros{0.0, 0.0};
  CHECK_THROWS_AS(expfam_kl_barycenter(two, zeros), ValidationError);
  const std::vector<double> negative{1.0, -1.0};
  CHECK_THROWS_AS(expfam_kl_barycenter(two, negative), ValidationError);
  CHECK_THROWS_AS(expfam_kl_barycenter(two, std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(expfam_kl_barycenter(std::vector<ExpFamilyMember>{}, std::vector<double>{}), ValidationError);
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(ExpFamilyMember(Family::Exponential, 0.5), ValidationError);
  CHECK_THROWS_AS(ExpFamilyMember(Family::Rayleigh, 0.0), ValidationError);
  CHECK_THROWS_AS(ExpFamilyMember(Family::Rayleigh, std::nan("")), ValidationError);
  CHECK_THROWS_AS(ExpFamilyMember::exponential(-1.0), ValidationError);
  CHECK_THROWS_AS(ExpFamilyMember::rayleigh(0.0), ValidationError);
}

TEST_CASE("expfam mm reduction") {
  ExpFamilyMixture orig;
  for (double r : {1.0, 1.1, 5.0, 5.2}) orig.members.push_back(ExpFamilyMember::exponential(r));
  orig.weights = {1.0, 1.0, 1.0, 1.0};
  ExpFamilyMixture init{{0.5, 0.5}, {ExpFamilyMember::exponential(0.5), ExpFamilyMember::exponential(10.0)}};
  const ExpFamilyReduction r = expfam_mm_reduce(orig, init, 0.0);
  CHECK(r.status == ReductionStatus::Converged);
  REQUIRE(r.reduced.members.size() == 2);
  CHECK(-r.reduced.members[0].theta() == doctest::Approx(2.0 / (1.0 + 1.0 / 1.1)).epsilon(1e-12));
  CHECK(-r.reduced.members[1].theta() == doctest::Approx(2.0 / (0.2 + 1.0 / 5.2)).epsilon(1e-12));
  CHECK(r.reduced.weights[0] == doctest::Approx(0.5));
  for (std::size_t t = 1; t < r.objective_trace.size(); ++t) CHECK(r.objective_trace[t] <= r.objective_trace[t - 1] + 1e-9);

  const ExpFamilyReduction one = expfam_mm_reduce(orig, ExpFamilyMixture{{1.0}, {ExpFamilyMember::exponential(1.0)}}, 0.0);
  const double mean = (1.0 + 1.0 / 1.1 + 0.2 + 1.0 / 5.2) / 4.0;
  CHECK(-one.reduced.members[0].theta() == doctest::Approx(1.0 / mean).epsilon(1e-12));

  Rng rng(64);
  for (int k = 0; k < 20; ++k) {
    ExpFamilyMixture o;
    for (int n = 0; n < 8; ++n) {
      o.members.push_back(ExpFamilyMember::rayleigh(rng.uniform(0.3, 4.0)));
      o.weights.push_back(rng.uniform(0.1, 1.0));
    }
    ExpFamilyMixture i{{1.0, 1.0, 1.0}, {o.members[0], o.members[3], o.members[6]}};
    const double lambda = rng.uniform(0.0, 0.5);
    const ExpFamilyReduction red = expfam_mm_reduce(o, i, lambda);
    for (std::size_t t = 1; t < red.objective_trace.size(); ++t) {
      CHECK(red.objective_trace[t] <= red.objective_trace[t - 1] + 1e-9);
    }
    double total = 0.0;
    for (double w : o.weights) total += w;
    for (Eigen::Index n = 0; n < red.plan.rows(); ++n) {
      CHECK(std::abs(red.plan.row(n).sum() - o.weights[static_cast<std::size_t>(n)] / total) <= 1e-12);
    }
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(std::abs(red.reduced.weights[m] - red.plan.col(static_cast<Eigen::Index>(m)).sum()) <= 1e-12);
    }
  }

  ExpFamilyMixture mixed{{1.0}, {ExpFamilyMember::rayleigh(1.0)}};
  CHECK_THROWS_AS(expfam_mm_reduce(orig, mixed, 0.0), ValidationError);
  ExpFamilyMixture too_many = orig;
  too_many.members.push_back(ExpFamilyMember::exponential(2.0));
  too_many.weights.push_back(1.0);
  CHECK_THROWS_AS(expfam_mm_reduce(orig, too_many, 0.0), ValidationError);
  ExpFamilyMixture bad = orig;
  bad.weights[0] = -1.0;
  CHECK_THROWS_AS(expfam_mm_reduce(bad, init, 0.0), ValidationError);
}
