#include "mixred/expfam.hpp"

#include <cmath>
#include <numbers>

#include "mixred/errors.hpp"

namespace mixred {

std::string to_string(Family family) {
  return family == Family::Exponential ? "exponential" : "rayleigh";
}

namespace {

constexpr FamilyInterface kExponential{
    [](double t) { return -1.0 / t; },
    [](double t) { return -std::log(-t); },
    [](double t) { return -1.0 / t; },
    [](double m) { return -1.0 / m; },
    [](double) { return 1.0; },
    [](double x) { return x; },
    [](double) { return 1.0; },
};

constexpr FamilyInterface kRayleigh{
    [](double t) { return -0.5 / t; },
    [](double t) { return -std::log(-2.0 * t); },
    [](double t) { return -1.0 / t; },
    [](double m) { return -1.0 / m; },
    [](double t) { return std::sqrt(-0.5 / t) * std::sqrt(std::numbers::pi / 2.0); },
    [](double x) { return x * x; },
    [](double x) { return x; },
};

void require_natural(double theta, const char* what) {
  if (!FamilyInterface::in_natural_space(theta)) {
    throw ValidationError(std::string(what) + ": natural parameter must be finite and negative");
  }
}

void require_same_family(const ExpFamilyMember& a, const ExpFamilyMember& b, const char* what) {
  if (a.family() != b.family()) throw ValidationError(std::string(what) + ": family mismatch");
}

}  // namespace

const FamilyInterface& family_interface(Family family) {
  return family == Family::Exponential ? kExponential : kRayleigh;
}

ExpFamilyMember::ExpFamilyMember(Family family, double theta) : family_(family), theta_(theta) {
  require_natural(theta, "ExpFamilyMember");
}

ExpFamilyMember ExpFamilyMember::exponential(double rate) {
  if (!(rate > 0.0)) throw ValidationError("exponential: rate must be positive");
  return ExpFamilyMember(Family::Exponential, -rate);
}

ExpFamilyMember ExpFamilyMember::rayleigh(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("rayleigh: sigma must be positive");
  return ExpFamilyMember(Family::Rayleigh, -0.5 / (sigma * sigma));
}

double ExpFamilyMember::log_density(double x) const {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  const FamilyInterface& f = interface();
  const double h = f.base_measure(x);
  if (h <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(h) + theta_ * f.statistic(x) - f.log_partition(theta_);
}

double ExpFamilyMember::density(double x) const { return std::exp(log_density(x)); }

bool operator==(const ExpFamilyMember& a, const ExpFamilyMember& b) {
  return a.family() == b.family() && a.theta() == b.theta();
}

double expfam_kl(const ExpFamilyMember& a, const ExpFamilyMember& b) {
  require_same_family(a, b, "expfam_kl");
  const FamilyInterface& f = a.interface();
  const double v = (a.theta() - b.theta()) * f.mean_param(a.theta()) -
                   (f.log_partition(a.theta()) - f.log_partition(b.theta()));
  return std::max(v, 0.0);
}

ExpFamilyMember expfam_kl_barycenter(std::span<const ExpFamilyMember> members,
                                     std::span<const double> lambdas) {
  if (members.empty()) throw ValidationError("expfam_kl_barycenter: no members");
  if (members.size() != lambdas.size()) throw ValidationError("expfam_kl_barycenter: lambda count mismatch");
  double total = 0.0, weighted = 0.0;
  for (std::size_t n = 0; n < members.size(); ++n) {
    require_same_family(members[0], members[n], "expfam_kl_barycenter");
    if (!(lambdas[n] >= 0.0) || !std::isfinite(lambdas[n])) {
      throw ValidationError("expfam_kl_barycenter: lambdas must be finite and nonnegative");
    }
    if (lambdas[n] == 0.0) continue;
    total += lambdas[n];
    weighted += lambdas[n] * members[n].mean_param();
  }
  if (!(total > 0.0)) throw ValidationError("expfam_kl_barycenter: lambdas sum to zero");
  const double mean = weighted / total;
  if (!FamilyInterface::in_mean_space(mean)) {
    throw NumericalError("expfam_kl_barycenter: averaged mean parameter outside the family's range");
  }
  const Family family = members[0].family();
  return ExpFamilyMember(family, family_interface(family).mean_param_inverse(mean));
}

double expfam_ise(const ExpFamilyMember& a, const ExpFamilyMember& b) {
  require_same_family(a, b, "expfam_ise");
  const FamilyInterface& f = a.interface();
  const double t1 = a.theta(), t2 = b.theta();
  for (double t : {2.0 * t1, 2.0 * t2, t1 + t2}) {
    if (!FamilyInterface::in_natural_space(t)) {
      throw ValidationError("expfam_ise: combined parameter leaves the natural parameter space");
    }
  }
  auto self = [&](double t) { return f.partition(2.0 * t) / (f.partition(t) * f.partition(t)) * f.h_expectation(2.0 * t); };
  const double cross =
      f.partition(t1 + t2) / (f.partition(t1) * f.partition(t2)) * f.h_expectation(t1 + t2);
  return std::max(self(t1) + self(t2) - 2.0 * cross, 0.0);
}

ExpFamilyReduction expfam_mm_reduce(const ExpFamilyMixture& original, const ExpFamilyMixture& init,
                                    double lambda, int max_iter, double tol) {
  if (original.members.empty() || original.members.size() != original.weights.size()) {
    throw ValidationError("expfam_mm_reduce: malformed original mixture");
  }
  if (init.members.size() > original.members.size()) {
    throw ValidationError("expfam_mm_reduce: initial order exceeds the original order");
  }
  for (const auto& m : init.members) require_same_family(original.members[0], m, "expfam_mm_reduce");
  double total = 0.0;
  for (double w : original.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("expfam_mm_reduce: invalid weight");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("expfam_mm_reduce: weights sum to zero");
  std::vector<double> weights = original.weights;
  for (double& w : weights) w /= total;

  MmFamily<ExpFamilyMember> family;
  family.cost = [](const ExpFamilyMember& o, const ExpFamilyMember& r, double) { return expfam_kl(o, r); };
  family.barycenter = [](std::span<const ExpFamilyMember> members, std::span<const double> lambdas,
                         const ExpFamilyMember&) { return expfam_kl_barycenter(members, lambdas); };
  MmOutcome<ExpFamilyMember> out = run_mm<ExpFamilyMember>(
      weights, original.members, family, lambda, max_iter, tol, {init.weights, init.members});
  return {{std::move(out.state.weights), std::move(out.state.components)}, std::move(out.plan),
          std::move(out.trace), out.status, out.iterations};
}

}  // namespace mixred
