#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "adot/barycenter.hpp"
#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/dual.hpp"
#include "adot/hedging.hpp"
#include "adot/polar.hpp"
#include "adot/process.hpp"

namespace adot::io {

using Json = nlohmann::json;

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
// FNV-1a 64-bit, as 16 hex digits
std::string digest(const std::string& content);

Json parse(const std::string& text, const std::string& what);

ProcessPtr process_from_json(const Json& doc);
Json process_to_json(const FilteredProcess& p);

// Cost file: {"type": "lp_sum", "p": 1|2} | {"type": "terminal_indicator"}
// | {"type": "constant", "value": k} | {"type": "table", "entries": [{"paths": [...], "c": k}]}
CostFunction cost_from_json(const Json& doc);

Coupling coupling_from_json(const Json& doc, const std::vector<ProcessPtr>& marginals);
Json coupling_to_json(const Coupling& pi, const std::vector<std::string>& marginal_refs);

Event event_from_json(const Json& doc, const std::vector<ProcessPtr>& marginals);

Payoff payoff_from_json(const Json& doc, const std::vector<ProcessPtr>& marginals);

CandidateSupport support_from_json(const Json& doc);

Json dual_to_json(const DualPotential& d);
Json strategy_to_json(const Strategy& s, const std::vector<ProcessPtr>& marginals);
Json certificate_to_json(const PolarCertificate& c, const std::vector<ProcessPtr>& marginals);
Json barycenter_dual_to_json(const BarycenterDual& d, const std::vector<ProcessPtr>& marginals,
                             const CandidateSupport& support);

/// Deterministic serialization: object keys sorted, floats with 17
/// significant digits, two-space indentation.
std::string dump(const Json& j);

}  // namespace adot::io
