#pragma once

#include <string>
#include <string_view>

#include "mixred/gaussian.hpp"

namespace mixred {

enum class CostKind { KL, ISE, CS, W2, SoftNLL };

/// Component-level cost c(phi_n, phi~_m) used by the transport plan, the
/// barycenter step and the objective.
///
/// W2 denotes the squared 2-Wasserstein distance. SoftNLL(I) is
/// c = -log w~_m - I * E_{phi_n}[log phi~_m], which depends on the reduced
/// weight as well as the reduced component.
struct CostSpec {
  CostKind kind = CostKind::KL;
  double inverse_temperature = 0.0;  ///< I; only meaningful for SoftNLL

  static CostSpec kl() { return {CostKind::KL, 0.0}; }
  static CostSpec ise() { return {CostKind::ISE, 0.0}; }
  static CostSpec cs() { return {CostKind::CS, 0.0}; }
  static CostSpec w2() { return {CostKind::W2, 0.0}; }
  static CostSpec soft_nll(double inverse_temperature);

  bool uses_reduced_weight() const { return kind == CostKind::SoftNLL; }
  void validate() const;
};

/// c(original, reduced); `reduced_weight` is read only by SoftNLL.
double component_cost(const CostSpec& cost, const Gaussian& original, const Gaussian& reduced,
                      double reduced_weight = 1.0);

std::string to_string(CostKind kind);
/// Parses "kl", "ise", "cs", "w2", "softnll" (case-insensitive).
CostKind parse_cost_kind(std::string_view name);

}  // namespace mixred
