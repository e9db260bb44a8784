#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/process.hpp"

// Seeded random instance generators shared by the test suites and the
// selftest command.
namespace adot::instances {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive

/// Tree with 1..max_children children per node, values on a 0.5 grid in
/// [-2, 2] and conditional probabilities bounded away from 0.
ProcessPtr random_tree(Rng& rng, int horizon, int max_children, int dimension, const std::string& prefix);

/// Like random_tree but values come from {0, 1} and some siblings are exact
/// copies of an earlier sibling subtree, so canonicalization has work to do.
ProcessPtr random_tree_with_repeats(Rng& rng, int horizon, int max_children, const std::string& prefix);

/// One-dimensional martingale with exactly two children per node and
/// distinct child values.
ProcessPtr random_binomial_martingale(Rng& rng, int horizon, const std::string& prefix);

/// Coupling of the given one-step laws (dense over the product of atoms,
/// first law most significant): a random mixture of north-west-corner
/// couplings under random atom orders and the independent coupling.
std::vector<double> random_one_step_coupling(Rng& rng, const std::vector<std::vector<double>>& laws);

/// Multicausal coupling glued from random one-step couplings of the kernels.
Coupling random_adapted_coupling(Rng& rng, const std::vector<ProcessPtr>& marginals);

/// North-west-corner coupling of the leaf laws under random orders; in
/// general not causal in any direction.
Coupling random_plain_coupling(Rng& rng, const std::vector<ProcessPtr>& marginals);

/// Table cost with entries uniform in [lo, hi] on every leaf tuple.
CostFunction random_table_cost(Rng& rng, const std::vector<ProcessPtr>& marginals, double lo, double hi);

/// mu: paths (1,1), (-1,-1); nu: paths (0,1), (0,-1); all with mass 1/2.
std::pair<ProcessPtr, ProcessPtr> gap_instance();

/// Tree whose leaf paths are the rows of `paths` (scalar values) with the
/// given masses; equal prefixes share a node.
ProcessPtr path_tree(const std::vector<std::vector<double>>& paths, const std::vector<double>& masses,
                     const std::string& prefix);

}  // namespace adot::instances
