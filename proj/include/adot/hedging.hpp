#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adot/causal_solver.hpp"

namespace adot {

struct Payoff {
  CostFunction xi;
  // optional per-marginal bounds l^i on own leaves with xi <= sum_i l^i
  std::vector<std::vector<double>> bounds;
};

/// Checks the domination by the bound witnesses on every tuple.
/// Throws PreconditionViolation if it fails.
void validate_payoff(const Payoff& payoff, const std::vector<ProcessPtr>& marginals);

struct NAReport {
  bool joint_martingale = false;
  bool multicausal = false;
  bool agree = false;
  double martingale_violation = 0.0;
  double causality_violation = 0.0;
  std::string witness;
};

/// Joint martingale property of the canonical process under pi together
/// with the multicausal check. Marginals must be one-dimensional martingale
/// trees (NotMartingaleMarginal otherwise).
NAReport check_na(const Coupling& pi, double tol = kDerivedTol);

struct PriceResult {
  double price = 0.0;
  AdaptedResult lp;  // inf problem for -xi
  Coupling worst_case_model;
};

PriceResult superhedge_price(const std::vector<ProcessPtr>& marginals, const Payoff& payoff);

/// delta[t] maps a joint prefix at depth t (node positions, empty for t = 0)
/// to one position per asset.
struct Strategy {
  double p0 = 0.0;
  std::vector<double> x0;  // E[X^i_1]
  std::vector<std::map<std::vector<std::size_t>, std::vector<double>>> delta;
};

/// Gains p0 + sum_t Delta_{t-1} . (X_t - X_{t-1}) on one leaf tuple.
double strategy_value(const Strategy& s, const std::vector<ProcessPtr>& marginals,
                      const std::vector<std::size_t>& leaves);

/// Converts the dual of the inf problem for -xi into a trading strategy.
/// Nodes with more than two children need least squares (residual gate
/// 1e-7); otherwise IncompleteMarket is thrown.
Strategy extract_strategy(const std::vector<ProcessPtr>& marginals, const DualPotential& dual,
                          bool allow_least_squares = false);

struct SuperhedgeReport {
  bool ok = true;
  bool dominates = true;
  bool replicates = true;           // equality on the support of the model
  double min_slack = 0.0;           // min over tuples of gains - xi
  double max_support_gap = 0.0;
  double expectation_gap = 0.0;     // |p0 - E^model[xi]|
  std::string witness;
};

SuperhedgeReport verify_superhedge(const Strategy& s, const std::vector<ProcessPtr>& marginals,
                                   const CostFunction& xi, const Coupling* model, double tol = 1e-7);

}  // namespace adot
