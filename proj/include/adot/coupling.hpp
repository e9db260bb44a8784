#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adot/cost.hpp"
#include "adot/process.hpp"

namespace adot {

enum class Mode { plain, causal, anticausal, bicausal, multicausal };

std::string_view mode_name(Mode m) noexcept;
Mode parse_mode(std::string_view name);

struct CouplingEntry {
  std::vector<std::size_t> leaves;  // leaf index per marginal
  double mass = 0.0;
};

/// Sparse joint law over tuples of leaf paths. Construction checks shapes
/// only; use check_coupling for marginal and causality constraints.
/// Masses in [-1e-12, 0) are clipped to 0, duplicate tuples are merged and
/// entries are kept sorted by tuple.
class Coupling {
 public:
  Coupling() = default;
  Coupling(std::vector<ProcessPtr> marginals, std::vector<CouplingEntry> entries);

  const std::vector<ProcessPtr>& marginals() const noexcept { return marginals_; }
  const std::vector<CouplingEntry>& entries() const noexcept { return entries_; }
  std::size_t arity() const noexcept { return marginals_.size(); }
  double total_mass() const;
  double mass_of(std::span<const std::size_t> leaves) const;

 private:
  std::vector<ProcessPtr> marginals_;
  std::vector<CouplingEntry> entries_;
};

struct CouplingReport {
  bool ok = true;
  Mode mode = Mode::plain;
  double worst_violation = 0.0;
  std::string witness;
};

Coupling product(std::span<const ProcessPtr> marginals);
Coupling product(const ProcessPtr& p, const ProcessPtr& q);

/// Marginal constraints plus, depending on mode, the causality product
/// identities mu(prefix) * pi(own leaf, others' prefix) =
/// mu(own leaf) * pi(own prefix, others' prefix) for t = 1..T-1.
/// causal and anticausal need exactly two marginals.
CouplingReport check_coupling(const Coupling& pi, Mode mode, double tol = kDerivedTol);

double expected_cost(const Coupling& pi, const CostFunction& c);

/// One-step conditional laws at depth t: key is the tuple of node positions
/// at depth t-1 (empty for t = 1), value maps child node tuples at depth t to
/// conditional probabilities.
using OneStepLaws = std::map<std::vector<std::size_t>, std::map<std::vector<std::size_t>, double>>;
OneStepLaws disintegrate_coupling(const Coupling& pi, int t);

/// Unconditional mass of every node tuple at depth t on the support of pi.
std::map<std::vector<std::size_t>, double> prefix_masses(const Coupling& pi, int t);

}  // namespace adot
