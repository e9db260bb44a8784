#pragma once

#include <map>
#include <string>
#include <vector>

#include "adot/bicausal_dp.hpp"
#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/lp.hpp"

namespace adot {

struct CandidatePath {
  std::string id;
  std::vector<std::vector<double>> values;  // values[t - 1], each of length d
};

struct CandidateSupport {
  int horizon = 1;
  int dimension = 1;
  std::vector<CandidatePath> paths;

  PathRef path(std::size_t a) const { return PathRef{paths[a].id, paths[a].values}; }
};

/// Throws EmptySupport, or MalformedInput for ragged or repeated paths.
void validate_support(const CandidateSupport& support);

/// prefix_classes(A)[t - 1][a]: class of candidate a by its values up to t,
/// numbered in order of first appearance.
std::vector<std::vector<std::size_t>> prefix_classes(const CandidateSupport& support);

struct BarycenterDual {
  std::vector<std::vector<double>> f;  // f[i][layer index of time-1 node of mu^i]
  std::vector<std::vector<double>> g;  // g[i][candidate]
  // compensators[i][t - 2]: [own node at t, candidate class at t - 1] -> value
  std::vector<std::vector<std::map<std::vector<std::size_t>, double>>> compensators;
  double value = 0.0;  // sum_i int f^i d mu^i_1
};

struct BarycenterResult {
  std::vector<double> weights;  // nu(a) per candidate
  ProcessPtr nu;                // tree of the supported candidates
  std::vector<std::size_t> nu_leaf;  // candidate -> leaf of nu (npos when unsupported)
  double value = 0.0;
  std::vector<Coupling> couplings;
  BarycenterDual dual;
  LPSolution lp;
};

BarycenterResult causal_barycenter(const std::vector<ProcessPtr>& marginals,
                                   const std::vector<CostFunction>& costs, const CandidateSupport& support);

struct BarycenterDualReport {
  bool ok = true;
  double max_congruency = 0.0;  // max_a |sum_i g^i(a)|
  double max_excess = 0.0;      // max over (i, leaf, candidate) of s^i - c^i
  double max_compensator_mean = 0.0;
  double value_gap = 0.0;
  std::string witness;
};

BarycenterDualReport verify_barycenter_dual(const BarycenterDual& dual, const std::vector<ProcessPtr>& marginals,
                                            const std::vector<CostFunction>& costs,
                                            const CandidateSupport& support, double primal_value);

/// Value of the barycenter objective at a fixed nu given as weights on the
/// candidates: sum_i of the causal transport cost from mu^i to nu.
double causal_objective_at(const std::vector<ProcessPtr>& marginals, const std::vector<CostFunction>& costs,
                           const CandidateSupport& support, const std::vector<double>& weights);

struct SearchResult {
  std::size_t best = 0;
  double value = 0.0;
  std::vector<double> values;  // per candidate
};

/// Sum over marginals of the bicausal value against each candidate; ties go
/// to the first candidate.
SearchResult bicausal_barycenter_search(const std::vector<ProcessPtr>& marginals,
                                        const std::vector<CostFunction>& costs,
                                        const std::vector<ProcessPtr>& candidates, const DPOptions& opts = {});

}  // namespace adot
