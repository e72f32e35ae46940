#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mixred/mm_engine.hpp"

namespace mixred {

/// One-parameter exponential families with densities
///   f(x | theta) = h(x) exp(theta T(x)) / A(theta),  theta < 0.
///   Exponential  T = x,    h = 1, A = -1/theta,      rate = -theta
///   Rayleigh     T = x^2,  h = x, A = -1/(2 theta),  sigma^2 = -1/(2 theta)
enum class Family { Exponential, Rayleigh };

std::string to_string(Family family);

/// Closed-form slots describing a family.
struct FamilyInterface {
  double (*partition)(double theta);      ///< A(theta)
  double (*log_partition)(double theta);  ///< log A(theta)
  double (*mean_param)(double theta);     ///< E_theta[T(X)], equal to d log A / d theta
  double (*mean_param_inverse)(double mean);
  double (*h_expectation)(double theta);  ///< E_theta[h(X)]
  double (*statistic)(double x);          ///< T(x)
  double (*base_measure)(double x);       ///< h(x)

  static bool in_natural_space(double theta) { return theta < 0.0 && std::isfinite(theta); }
  /// Both families have mean parameter range (0, inf).
  static bool in_mean_space(double mean) { return mean > 0.0 && std::isfinite(mean); }
};

const FamilyInterface& family_interface(Family family);

class ExpFamilyMember {
 public:
  ExpFamilyMember(Family family, double theta);

  static ExpFamilyMember exponential(double rate);
  static ExpFamilyMember rayleigh(double sigma);

  Family family() const { return family_; }
  double theta() const { return theta_; }
  const FamilyInterface& interface() const { return family_interface(family_); }
  double mean_param() const { return interface().mean_param(theta_); }

  double log_density(double x) const;
  double density(double x) const;

 private:
  Family family_;
  double theta_;
};

bool operator==(const ExpFamilyMember& a, const ExpFamilyMember& b);

/// (theta1 - theta2) mu(theta1) - log(A(theta1) / A(theta2)).
double expfam_kl(const ExpFamilyMember& a, const ExpFamilyMember& b);

/// theta = mu^{-1}(sum lambda~_n mu(theta_n)).
ExpFamilyMember expfam_kl_barycenter(std::span<const ExpFamilyMember> members,
                                     std::span<const double> lambdas);

/// Closed-form integrated squared error between two members.
double expfam_ise(const ExpFamilyMember& a, const ExpFamilyMember& b);

struct ExpFamilyMixture {
  std::vector<double> weights;
  std::vector<ExpFamilyMember> members;
};

struct ExpFamilyReduction {
  ExpFamilyMixture reduced;
  Matrix plan;
  std::vector<double> objective_trace;
  ReductionStatus status;
  int iterations;
};

/// The majorization-minimization reduction under KL cost, from `init`.
ExpFamilyReduction expfam_mm_reduce(const ExpFamilyMixture& original, const ExpFamilyMixture& init,
                                    double lambda, int max_iter = 200, double tol = 1e-8);

}  // namespace mixred
