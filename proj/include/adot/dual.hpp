#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/process.hpp"

namespace adot {

/// Structured dual element
///
///   s = sum_i f^i_1(x^i_1) + sum_i g^i(x^i) + sum_i sum_{t>=2} f^i_t(x^i_t, others_{t-1})
///
/// where each compensator f^i_t has zero mean under the kernel of marginal i
/// for every conditioning index. `initial[i]` is indexed by the layer index
/// of time-1 nodes (empty when marginal i has no initial part), `terminal[i]`
/// by leaf index (causal mode: the whole-path potential of the second
/// marginal). `compensators[i][t-2]` is keyed by
/// [own node position at t, others' node positions at t-1 in marginal order].
struct DualPotential {
  Mode mode = Mode::plain;
  std::vector<ProcessPtr> marginals;
  std::vector<std::vector<double>> initial;
  std::vector<std::vector<double>> terminal;
  std::vector<std::vector<std::map<std::vector<std::size_t>, double>>> compensators;
  double value = 0.0;

  double evaluate(std::span<const std::size_t> leaves) const;
  // initial parts plus compensators up to time t (terminal parts only at t = T)
  double running_value(std::span<const std::size_t> leaves, int t) const;
  // sum_i int f^i_1 d mu^i_1 + sum_i int g^i d mu^i
  double dual_value() const;
};

struct DualCheck {
  bool ok = true;
  double max_excess = 0.0;           // max(s - c)
  double max_compensator_mean = 0.0;
  double value_gap = 0.0;            // |dual_value - target|
  std::string witness;
};

/// Pointwise feasibility on every leaf tuple, compensator means and the
/// dual value against `target`.
DualCheck verify_dual(const DualPotential& dual, const CostFunction& c, double target,
                      double feas_tol = 1e-7, double mean_tol = 1e-9, double value_tol = 1e-7);

/// Largest |conditional mean| of any compensator.
double max_compensator_mean(const DualPotential& dual);

/// Subtracts each compensator's conditional mean so the means vanish exactly.
void recenter_compensators(DualPotential& dual);

}  // namespace adot
