#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mixred/bp.hpp"
#include "mixred/mixture.hpp"
#include "mixred/reduce.hpp"

namespace mixred {

using Json = nlohmann::json;

// Readers throw ValidationError on malformed input, including non-SPD
// covariances and weight sums outside [1 - 1e-6, 1 + 1e-6].

Json to_json(const GaussianMixture& mix);
GaussianMixture mixture_from_json(const Json& j);

Json to_json(const TransportPlan& plan);
Json to_json(const ReductionResult& result);

Json to_json(const FactorGraph& graph);
FactorGraph graph_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes j with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

GaussianMixture read_mixture(const std::filesystem::path& path);
FactorGraph read_graph(const std::filesystem::path& path);

}  // namespace mixred
