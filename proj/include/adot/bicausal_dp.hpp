#pragma once

#include <vector>

#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/dual.hpp"
#include "adot/lp.hpp"
#include "adot/process.hpp"

namespace adot {

/// Bellman tables V_t(x_t, y_t) for t = 1..T, stored per depth as
/// [layer index of x * count_at(t) of Y + layer index of y], plus V_0.
struct ValueProcess {
  ProcessPtr x, y;
  std::vector<std::vector<double>> tables;  // tables[t - 1]
  double v0 = 0.0;

  double at(int t, std::size_t x_pos, std::size_t y_pos) const;
};

/// Optimal one-step transport at a prefix pair. Stage s moves from depth s
/// to depth s + 1; stage 0 is the pair of empty prefixes.
struct LocalStep {
  TransportResult transport;
};

struct BicausalSolution {
  double value = 0.0;
  ValueProcess value_process;
  Coupling coupling;
  // steps[s][pair] with pair = layer index of x * count of Y at depth s + layer index of y
  std::vector<std::vector<LocalStep>> steps;
  std::size_t lp_iterations = 0;
  double max_local_gap = 0.0;
};

struct DPOptions {
  unsigned threads = 1;
  SimplexOptions simplex;
};

BicausalSolution solve_bicausal(const ProcessPtr& x, const ProcessPtr& y, const CostFunction& c,
                                const DPOptions& opts = {});

ValueProcess value_process(const ProcessPtr& x, const ProcessPtr& y, const CostFunction& c,
                           const DPOptions& opts = {});

enum class MartingaleMode { submartingale, martingale };

/// Compares V_t with the conditional expectation of V_{t+1} under the
/// one-step conditionals of pi on every support prefix pair.
CouplingReport verify_value_martingale(const ValueProcess& v, const Coupling& pi, MartingaleMode mode,
                                       double tol = kDerivedTol);

/// Telescoped dual in bicausal form from the local transport potentials.
/// Throws DualVerificationFailed when any of the certified properties fails.
DualPotential dual_from_value(const BicausalSolution& sol, const CostFunction& c);

struct DualValueCheck {
  double max_compensator_mean = 0.0;
  double max_excess = 0.0;        // max over leaf pairs of s - c
  double value_gap = 0.0;         // |dual value - V_0|
  double max_running_gap = 0.0;   // max |M_t - V_t| on the optimal support
};
DualValueCheck check_dual_against_value(const DualPotential& d, const BicausalSolution& sol,
                                        const CostFunction& c);

/// Per depth: max |V_t(x, y) - V_t(x', y)| / ||x_t - x'_t||_1 over sibling
/// X nodes with distinct values (and the mirrored Y quantity).
std::vector<double> lipschitz_estimates(const ValueProcess& v);

}  // namespace adot
