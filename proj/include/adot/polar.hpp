#pragma once

#include <set>
#include <string>
#include <vector>

#include "adot/causal_solver.hpp"

namespace adot {

using Event = std::set<std::vector<std::size_t>>;  // leaf tuples

/// max of pi(E) over the couplings of the given mode.
double polar_max(const Event& e, const std::vector<ProcessPtr>& marginals, Mode mode);

/// A^{t,i} slice: the children of `key[0]` (own node at t-1, or npos for t = 1)
/// kept after conditioning on the others' prefix `key[1..]`.
struct PolarSlice {
  std::size_t marginal = 0;
  int t = 1;
  std::vector<std::size_t> key;
  std::vector<std::size_t> members;  // node positions (leaf indices for terminal slices)
  bool terminal = false;             // whole-path slice of a non-owner marginal (causal mode)
  bool full = false;
};

struct PolarCertificate {
  Mode mode = Mode::multicausal;
  std::vector<PolarSlice> slices;
  bool ok = false;
  double threshold = 0.0;
  std::string witness;
};

/// Builds slices from the zero-level sets of the dual potentials for the cost
/// -1_E and verifies them (every slice full, E disjoint from the gluing).
/// Never throws on verification failure; `ok` reports the outcome.
PolarCertificate try_build_certificate(const Event& e, const std::vector<ProcessPtr>& marginals, Mode mode);

/// Throws PreconditionViolation when E is not polar and CertificateFailed
/// when the structural verification fails.
PolarCertificate polar_certificate(const Event& e, const std::vector<ProcessPtr>& marginals,
                                   Mode mode = Mode::multicausal);

/// Whether a leaf tuple lies in the gluing of the certificate's slices.
bool in_gluing(const PolarCertificate& cert, const std::vector<ProcessPtr>& marginals,
               const std::vector<std::size_t>& leaves);

CostFunction event_cost(const Event& e, const std::vector<ProcessPtr>& marginals);

}  // namespace adot
