#pragma once

#include <vector>

#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/dual.hpp"
#include "adot/lp.hpp"

namespace adot {

/// Row bookkeeping for the leaf-tuple LP, needed to map multipliers back
/// to structured potentials.
struct AdaptedRow {
  enum class Kind { initial, terminal, compensator } kind = Kind::initial;
  std::size_t marginal = 0;
  int t = 1;
  // initial: time-1 node position; terminal: leaf index;
  // compensator: [own node at t, others' nodes at t-1]
  std::vector<std::size_t> key;
};

struct AdaptedLP {
  Mode mode = Mode::multicausal;
  std::vector<ProcessPtr> marginals;
  LinearProgram lp;
  std::vector<AdaptedRow> rows;
};

struct AdaptedResult {
  Mode mode = Mode::multicausal;
  double value = 0.0;
  Coupling coupling;
  LPSolution lp;
  AdaptedLP program;
};

/// Builds the leaf-tuple LP. Variables are all product tuples in
/// leaf_indexer order. For each marginal i owning a causality constraint:
/// rows fixing its time-1 law and, for t >= 2, one-step rows
///   pi(u, w) - K(u) pi(parent(u), w) = 0
/// for every own node u at depth t except the last child of each sibling
/// group and every prefix tuple w of the other marginals at depth t-1.
/// In causal mode the second marginal contributes its full leaf law instead.
AdaptedLP build_adapted_lp(const std::vector<ProcessPtr>& marginals, const CostFunction& c, Mode mode);

AdaptedResult solve_adapted_lp(const std::vector<ProcessPtr>& marginals, const CostFunction& c,
                               Mode mode, const SimplexOptions& opts = {});

/// Maps LP multipliers to the structured dual (initial parts, whole-path g in
/// causal mode, compensators a_t - K a_t), fixes the additive gauge and
/// verifies s <= c + 1e-7 and |dual - primal| <= 1e-7.
/// Throws DualVerificationFailed.
DualPotential extract_dual(const AdaptedResult& result, const CostFunction& c);

/// Same mapping without the gauge and verification.
DualPotential raw_dual(const AdaptedResult& result);

}  // namespace adot
