#include "mixred/cost.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "mixred/errors.hpp"

namespace mixred {

CostSpec CostSpec::soft_nll(double inverse_temperature) {
  CostSpec spec{CostKind::SoftNLL, inverse_temperature};
  spec.validate();
  return spec;
}

void CostSpec::validate() const {
  if (kind == CostKind::SoftNLL && !(inverse_temperature > 0.0 && std::isfinite(inverse_temperature))) {
    throw ValidationError("SoftNLL cost requires I > 0");
  }
}

double component_cost(const CostSpec& cost, const Gaussian& original, const Gaussian& reduced,
                      double reduced_weight) {
  switch (cost.kind) {
    case CostKind::KL:
      return kl(original, reduced);
    case CostKind::ISE:
      return ise(original, reduced);
    case CostKind::CS:
      return cs(original, reduced);
    case CostKind::W2:
      return w2_squared(original, reduced);
    case CostKind::SoftNLL: {
      const double log_w = reduced_weight > 0.0 ? std::log(reduced_weight)
                                                : -std::numeric_limits<double>::infinity();
      return -log_w - cost.inverse_temperature * expected_log_density(original, reduced);
    }
  }
  throw ValidationError("unknown cost kind");
}

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::KL: return "kl";
    case CostKind::ISE: return "ise";
    case CostKind::CS: return "cs";
    case CostKind::W2: return "w2";
    case CostKind::SoftNLL: return "softnll";
  }
  return "unknown";
}

CostKind parse_cost_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "kl") return CostKind::KL;
  if (lower == "ise") return CostKind::ISE;
  if (lower == "cs") return CostKind::CS;
  if (lower == "w2") return CostKind::W2;
  if (lower == "softnll") return CostKind::SoftNLL;
  throw ValidationError("unknown cost '" + std::string(name) + "' (expected kl|ise|cs|w2|softnll)");
}

}  // namespace mixred
