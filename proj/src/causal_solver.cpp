#include "adot/causal_solver.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "adot/errors.hpp"

namespace adot {

namespace {

struct Roles {
  std::vector<bool> owner;     // has time-1 rows and compensators
  std::vector<bool> terminal;  // has whole-leaf rows
};

Roles roles_for(Mode mode, std::size_t n) {
  Roles r{std::vector<bool>(n, false), std::vector<bool>(n, false)};
  switch (mode) {
    case Mode::plain:
      r.terminal.assign(n, true);
      break;
    case Mode::causal:
    case Mode::anticausal:
    case Mode::bicausal:
      if (n != 2) fail(ErrorCode::PreconditionViolation, std::string(mode_name(mode)) + " needs two marginals");
      r.owner[0] = mode != Mode::anticausal;
      r.owner[1] = mode != Mode::causal;
      r.terminal[0] = !r.owner[0];
      r.terminal[1] = !r.owner[1];
      break;
    case Mode::multicausal:
      if (n < 2) fail(ErrorCode::PreconditionViolation, "multicausal needs at least two marginals");
      r.owner.assign(n, true);
      break;
  }
  return r;
}

std::vector<std::size_t> others_prefix(const std::vector<ProcessPtr>& ms, std::size_t own, int t,
                                       std::span<const std::size_t> leaves) {
  std::vector<std::size_t> w;
  for (std::size_t j = 0; j < ms.size(); ++j) {
    if (j != own) w.push_back(ms[j]->ancestor(leaves[j], t));
  }
  return w;
}

// Every tuple of node positions at depth t of the marginals other than own.
std::vector<std::vector<std::size_t>> all_other_prefixes(const std::vector<ProcessPtr>& ms,
                                                         std::size_t own, int t) {
  std::vector<std::vector<std::size_t>> out{{}};
  for (std::size_t j = 0; j < ms.size(); ++j) {
    if (j == own) continue;
    auto [first, last] = ms[j]->nodes_at(t);
    std::vector<std::vector<std::size_t>> next;
    for (const auto& prefix : out) {
      for (std::size_t pos = first; pos < last; ++pos) {
        next.push_back(prefix);
        next.back().push_back(pos);
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

AdaptedLP build_adapted_lp(const std::vector<ProcessPtr>& marginals, const CostFunction& c, Mode mode) {
  if (marginals.empty()) fail(ErrorCode::MalformedInput, "no marginals");
  const int T = marginals[0]->horizon();
  for (const ProcessPtr& m : marginals) {
    if (m->horizon() != T) fail(ErrorCode::HorizonMismatch, "marginals have different horizons");
  }
  const std::size_t n = marginals.size();
  const Roles roles = roles_for(mode, n);
  const ProductIndexer idx = leaf_indexer(marginals);

  AdaptedLP out;
  out.mode = mode;
  out.marginals = marginals;
  std::vector<AdaptedRow>& rows = out.rows;
  std::vector<double> rhs;

  // row lookup tables
  std::vector<std::vector<std::size_t>> initial_row(n), terminal_row(n);
  std::vector<std::vector<std::map<std::vector<std::size_t>, std::size_t>>> comp_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *marginals[i];
    if (roles.owner[i]) {
      auto [first, last] = m.nodes_at(1);
      for (std::size_t pos = first; pos < last; ++pos) {
        initial_row[i].push_back(rows.size());
        rows.push_back({AdaptedRow::Kind::initial, i, 1, {pos}});
        rhs.push_back(m.prob(pos));
      }
      comp_row[i].resize(static_cast<std::size_t>(std::max(0, T - 1)));
      for (int t = 2; t <= T; ++t) {
        const auto others = all_other_prefixes(marginals, i, t - 1);
        auto [pf, pl] = m.nodes_at(t - 1);
        for (std::size_t p = pf; p < pl; ++p) {
          auto [cb, ce] = m.children(p);
          // the last child's row is implied by the others and the parent's mass
          for (std::size_t u = cb; u + 1 < ce; ++u) {
            for (const auto& w : others) {
              std::vector<std::size_t> key{u};
              key.insert(key.end(), w.begin(), w.end());
              comp_row[i][t - 2].emplace(key, rows.size());
              rows.push_back({AdaptedRow::Kind::compensator, i, t, key});
              rhs.push_back(0.0);
            }
          }
        }
      }
    }
    if (roles.terminal[i]) {
      for (std::size_t l = 0; l < m.num_leaves(); ++l) {
        terminal_row[i].push_back(rows.size());
        rows.push_back({AdaptedRow::Kind::terminal, i, T, {l}});
        rhs.push_back(m.leaf_prob(l));
      }
    }
  }

  LinearProgram& lp = out.lp;
  lp = LinearProgram(rows.size(), idx.size());
  lp.b = rhs;
  std::vector<std::size_t> tuple(n);
  std::vector<std::size_t> key;
  for (std::size_t v = 0; v < idx.size(); ++v) {
    idx.unflat(v, tuple);
    lp.c[v] = evaluate_cost(c, marginals, tuple);
    for (std::size_t i = 0; i < n; ++i) {
      const FilteredProcess& m = *marginals[i];
      if (roles.terminal[i]) lp.at(terminal_row[i][tuple[i]], v) = 1.0;
      if (!roles.owner[i]) continue;
      lp.at(initial_row[i][m.layer_index(m.ancestor(tuple[i], 1))], v) = 1.0;
      for (int t = 2; t <= T; ++t) {
        const std::size_t here = m.ancestor(tuple[i], t);
        const std::size_t p = m.parent(here);
        const std::vector<std::size_t> w = others_prefix(marginals, i, t - 1, tuple);
        key.assign(1, 0);
        key.insert(key.end(), w.begin(), w.end());
        auto [cb, ce] = m.children(p);
        for (std::size_t u = cb; u + 1 < ce; ++u) {
          key[0] = u;
          const std::size_t r = comp_row[i][t - 2].at(key);
          lp.at(r, v) = (u == here ? 1.0 : 0.0) - m.cond_prob(u);
        }
      }
    }
  }
  return out;
}

AdaptedResult solve_adapted_lp(const std::vector<ProcessPtr>& marginals, const CostFunction& c,
                               Mode mode, const SimplexOptions& opts) {
  AdaptedResult res;
  res.mode = mode;
  res.program = build_adapted_lp(marginals, c, mode);
  res.lp = solve_lp(res.program.lp, opts);
  if (res.lp.status == LPStatus::infeasible) {
    // the product coupling is always feasible, so this is a numerical problem
    fail(ErrorCode::NumericalFailure, "adapted transport LP reported infeasible");
  }
  if (res.lp.status == LPStatus::unbounded) {
    fail(ErrorCode::NumericalFailure, "adapted transport LP reported unbounded");
  }
  res.value = res.lp.objective;
  const ProductIndexer idx = leaf_indexer(marginals);
  std::vector<CouplingEntry> entries;
  std::vector<std::size_t> tuple(marginals.size());
  for (std::size_t v = 0; v < idx.size(); ++v) {
    if (res.lp.x[v] <= 0.0) continue;
    idx.unflat(v, tuple);
    entries.push_back({tuple, res.lp.x[v]});
  }
  res.coupling = Coupling(marginals, std::move(entries));
  return res;
}

DualPotential raw_dual(const AdaptedResult& result) {
  const AdaptedLP& prog = result.program;
  const std::vector<ProcessPtr>& ms = prog.marginals;
  const std::size_t n = ms.size();
  const int T = ms[0]->horizon();

  DualPotential d;
  d.mode = result.mode;
  d.marginals = ms;
  d.initial.assign(n, {});
  d.terminal.assign(n, {});
  d.compensators.assign(n, {});
  // multipliers a_t(u, w); the pruned last child has a = 0
  std::vector<std::vector<std::map<std::vector<std::size_t>, double>>> a(n);
  for (std::size_t r = 0; r < prog.rows.size(); ++r) {
    const AdaptedRow& row = prog.rows[r];
    const FilteredProcess& m = *ms[row.marginal];
    const double y = result.lp.y[r];
    switch (row.kind) {
      case AdaptedRow::Kind::initial: {
        auto& init = d.initial[row.marginal];
        if (init.empty()) init.assign(m.count_at(1), 0.0);
        init[m.layer_index(row.key[0])] = y;
        break;
      }
      case AdaptedRow::Kind::terminal: {
        auto& term = d.terminal[row.marginal];
        if (term.empty()) term.assign(m.num_leaves(), 0.0);
        term[row.key[0]] = y;
        break;
      }
      case AdaptedRow::Kind::compensator: {
        auto& at = a[row.marginal];
        if (at.empty()) at.resize(static_cast<std::size_t>(T - 1));
        at[row.t - 2][row.key] = y;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool owner = !d.initial[i].empty();
    if (!owner) continue;
    const FilteredProcess& m = *ms[i];
    d.compensators[i].resize(static_cast<std::size_t>(std::max(0, T - 1)));
    for (int t = 2; t <= T; ++t) {
      const auto others = all_other_prefixes(ms, i, t - 1);
      auto [pf, pl] = m.nodes_at(t - 1);
      for (std::size_t p = pf; p < pl; ++p) {
        auto [cb, ce] = m.children(p);
        for (const auto& w : others) {
          std::vector<std::size_t> key{0};
          key.insert(key.end(), w.begin(), w.end());
          std::vector<double> av(ce - cb, 0.0);
          double mean = 0.0;
          for (std::size_t u = cb; u < ce; ++u) {
            key[0] = u;
            if (!a[i].empty()) {
              auto it = a[i][t - 2].find(key);
              if (it != a[i][t - 2].end()) av[u - cb] = it->second;
            }
            mean += m.cond_prob(u) * av[u - cb];
          }
          for (std::size_t u = cb; u < ce; ++u) {
            key[0] = u;
            d.compensators[i][t - 2][key] = av[u - cb] - mean;
          }
        }
      }
    }
  }
  d.value = d.dual_value();
  return d;
}

DualPotential extract_dual(const AdaptedResult& result, const CostFunction& c) {
  DualPotential d = raw_dual(result);
  const std::size_t n = d.marginals.size();

  // gauge: equal integrals of the non-compensator parts across marginals
  std::vector<double> integral(n, 0.0);
  std::vector<bool> has(n, false);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *d.marginals[i];
    if (!d.initial[i].empty()) {
      auto [first, last] = m.nodes_at(1);
      for (std::size_t pos = first; pos < last; ++pos) integral[i] += m.prob(pos) * d.initial[i][pos - first];
      has[i] = true;
    } else if (!d.terminal[i].empty()) {
      for (std::size_t l = 0; l < m.num_leaves(); ++l) integral[i] += m.leaf_prob(l) * d.terminal[i][l];
      has[i] = true;
    }
    if (has[i]) ++count;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += integral[i];
  const double target = count ? total / static_cast<double>(count) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!has[i]) continue;
    const double shift = target - integral[i];
    auto& part = d.initial[i].empty() ? d.terminal[i] : d.initial[i];
    for (double& v : part) v += shift;
  }
  recenter_compensators(d);
  d.value = d.dual_value();

  const DualCheck chk = verify_dual(d, c, result.value, 1e-7, 1e-9, 1e-7);
  if (!chk.ok) {
    std::ostringstream os;
    os << "extracted dual failed verification: excess " << chk.max_excess << ", mean "
       << chk.max_compensator_mean << ", value gap " << chk.value_gap << " (" << chk.witness << ")";
    fail(ErrorCode::DualVerificationFailed, os.str());
  }
  return d;
}

}  // namespace adot
