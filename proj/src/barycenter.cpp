#include "adot/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>

#include "adot/causal_solver.hpp"
#include "adot/errors.hpp"

namespace adot {

namespace {

std::vector<std::int64_t> quantized_prefix(const CandidatePath& p, int t) {
  std::vector<std::int64_t> q;
  for (int s = 0; s < t; ++s) {
    for (double v : p.values[s]) q.push_back(static_cast<std::int64_t>(std::llround(v / kInputTol)));
  }
  return q;
}

// Tree of the candidates with positive weight; node ids are the candidate id
// for leaves and "<first candidate id>@t<t>" for inner nodes.
ProcessPtr build_nu(const CandidateSupport& A, const std::vector<double>& weights,
                    std::vector<std::size_t>& leaf_of) {
  const int T = A.horizon;
  const auto classes = prefix_classes(A);
  std::vector<std::size_t> live;
  double total = 0.0;
  for (std::size_t a = 0; a < A.paths.size(); ++a) {
    if (weights[a] > 1e-12) {
      live.push_back(a);
      total += weights[a];
    }
  }
  if (live.empty()) fail(ErrorCode::NumericalFailure, "barycenter has no mass");
  std::vector<NodeSpec> nodes;
  std::vector<std::map<std::size_t, std::pair<std::string, double>>> made(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    for (std::size_t a : live) {
      auto& entry = made[t - 1][classes[t - 1][a]];
      if (entry.first.empty()) {
        entry.first = t == T ? A.paths[a].id : A.paths[a].id + "@t" + std::to_string(t);
      }
      entry.second += weights[a] / total;
    }
  }
  for (int t = 1; t <= T; ++t) {
    std::set<std::size_t> done;
    for (std::size_t a : live) {
      const std::size_t cls = classes[t - 1][a];
      if (!done.insert(cls).second) continue;
      NodeSpec s;
      s.id = made[t - 1][cls].first;
      s.t = t;
      s.value = A.paths[a].values[t - 1];
      const double mass = made[t - 1][cls].second;
      if (t == 1) {
        s.prob = mass;
      } else {
        const auto& parent = made[t - 2][classes[t - 2][a]];
        s.prob = mass / parent.second;
        s.parent = parent.first;
      }
      nodes.push_back(std::move(s));
    }
  }
  ProcessPtr nu = FilteredProcess::build(A.dimension, T, std::move(nodes));
  leaf_of.assign(A.paths.size(), FilteredProcess::npos);
  for (std::size_t a : live) leaf_of[a] = *nu->find_leaf(A.paths[a].id);
  return nu;
}

}  // namespace

void validate_support(const CandidateSupport& A) {
  if (A.paths.empty()) fail(ErrorCode::EmptySupport, "candidate support is empty");
  std::set<std::string> ids;
  std::set<std::vector<std::int64_t>> seen;
  for (const CandidatePath& p : A.paths) {
    if (!ids.insert(p.id).second) fail(ErrorCode::MalformedInput, "duplicate candidate id '" + p.id + "'");
    if (static_cast<int>(p.values.size()) != A.horizon) {
      fail(ErrorCode::MalformedInput, "candidate '" + p.id + "' has wrong length");
    }
    for (const auto& v : p.values) {
      if (static_cast<int>(v.size()) != A.dimension) {
        fail(ErrorCode::MalformedInput, "candidate '" + p.id + "' has wrong dimension");
      }
      for (double x : v) {
        if (!std::isfinite(x)) fail(ErrorCode::MalformedInput, "candidate '" + p.id + "' not finite");
      }
    }
    if (!seen.insert(quantized_prefix(p, A.horizon)).second) {
      fail(ErrorCode::MalformedInput, "candidate '" + p.id + "' repeats another path");
    }
  }
}

std::vector<std::vector<std::size_t>> prefix_classes(const CandidateSupport& A) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(A.horizon));
  for (int t = 1; t <= A.horizon; ++t) {
    std::map<std::vector<std::int64_t>, std::size_t> ids;
    for (const CandidatePath& p : A.paths) {
      auto [it, inserted] = ids.emplace(quantized_prefix(p, t), ids.size());
      out[t - 1].push_back(it->second);
    }
  }
  return out;
}

BarycenterResult causal_barycenter(const std::vector<ProcessPtr>& ms, const std::vector<CostFunction>& costs,
                                   const CandidateSupport& A) {
  validate_support(A);
  if (ms.empty()) fail(ErrorCode::MalformedInput, "no marginals");
  if (costs.size() != ms.size()) fail(ErrorCode::MalformedInput, "need one cost per marginal");
  const int T = A.horizon;
  for (const ProcessPtr& m : ms) {
    if (m->horizon() != T) fail(ErrorCode::HorizonMismatch, "marginal horizon differs from candidates");
  }
  const std::size_t n = ms.size();
  const std::size_t na = A.paths.size();
  const auto classes = prefix_classes(A);
  std::vector<std::size_t> nclass(static_cast<std::size_t>(T), 0);
  for (int t = 1; t <= T; ++t) {
    for (std::size_t c : classes[t - 1]) nclass[t - 1] = std::max(nclass[t - 1], c + 1);
  }

  // variable layout: nu(a), then pi^i(x, a) blocks
  std::vector<std::size_t> offset(n);
  std::size_t nvars = na;
  for (std::size_t i = 0; i < n; ++i) {
    offset[i] = nvars;
    nvars += ms[i]->num_leaves() * na;
  }

  struct RowInfo {
    int kind;  // 0 time-1, 1 g, 2 compensator, 3 total mass
    std::size_t i;
    int t;
    std::vector<std::size_t> key;
  };
  std::vector<RowInfo> info;
  std::vector<std::vector<std::size_t>> f_row(n), g_row(n);
  std::vector<std::vector<std::map<std::vector<std::size_t>, std::size_t>>> c_row(n);
  LinearProgram lp(0, nvars);
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    auto [first, last] = m.nodes_at(1);
    for (std::size_t u = first; u < last; ++u) {
      f_row[i].push_back(lp.add_row(m.prob(u)));
      info.push_back({0, i, 1, {u}});
    }
    for (std::size_t a = 0; a < na; ++a) {
      g_row[i].push_back(lp.add_row(0.0));
      info.push_back({1, i, T, {a}});
    }
    c_row[i].resize(static_cast<std::size_t>(std::max(0, T - 1)));
    for (int t = 2; t <= T; ++t) {
      auto [pf, pl] = m.nodes_at(t - 1);
      for (std::size_t p = pf; p < pl; ++p) {
        auto [cb, ce] = m.children(p);
        for (std::size_t u = cb; u + 1 < ce; ++u) {
          for (std::size_t w = 0; w < nclass[t - 2]; ++w) {
            c_row[i][t - 2].emplace(std::vector<std::size_t>{u, w}, lp.add_row(0.0));
            info.push_back({2, i, t, {u, w}});
          }
        }
      }
    }
  }
  const std::size_t lambda_row = lp.add_row(1.0);
  info.push_back({3, 0, 0, {}});

  for (std::size_t a = 0; a < na; ++a) {
    lp.at(lambda_row, a) = 1.0;
    for (std::size_t i = 0; i < n; ++i) lp.at(g_row[i][a], a) = -1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    for (std::size_t x = 0; x < m.num_leaves(); ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        const std::size_t v = offset[i] + x * na + a;
        const PathRef paths[2] = {m.leaf_path(x), A.path(a)};
        lp.c[v] = costs[i](paths);
        if (!std::isfinite(lp.c[v])) fail(ErrorCode::MalformedInput, "barycenter cost not finite");
        lp.at(f_row[i][m.layer_index(m.ancestor(x, 1))], v) = 1.0;
        lp.at(g_row[i][a], v) = 1.0;
        for (int t = 2; t <= T; ++t) {
          const std::size_t here = m.ancestor(x, t);
          auto [cb, ce] = m.children(m.parent(here));
          const std::size_t w = classes[t - 2][a];
          for (std::size_t u = cb; u + 1 < ce; ++u) {
            lp.at(c_row[i][t - 2].at({u, w}), v) = (u == here ? 1.0 : 0.0) - m.cond_prob(u);
          }
        }
      }
    }
  }

  BarycenterResult res;
  res.lp = solve_lp(lp);
  if (res.lp.status != LPStatus::optimal) {
    fail(ErrorCode::NumericalFailure, "barycenter LP not solved to optimality");
  }
  res.value = res.lp.objective;
  res.weights.assign(res.lp.x.begin(), res.lp.x.begin() + static_cast<std::ptrdiff_t>(na));

  // structured dual from the multipliers
  BarycenterDual& d = res.dual;
  d.f.assign(n, {});
  d.g.assign(n, std::vector<double>(na, 0.0));
  d.compensators.assign(n, std::vector<std::map<std::vector<std::size_t>, double>>(
                               static_cast<std::size_t>(std::max(0, T - 1))));
  double lambda = 0.0;
  std::vector<std::vector<std::map<std::vector<std::size_t>, double>>> amult(
      n, std::vector<std::map<std::vector<std::size_t>, double>>(static_cast<std::size_t>(std::max(0, T - 1))));
  for (std::size_t r = 0; r < info.size(); ++r) {
    const RowInfo& ri = info[r];
    const double y = res.lp.y[r];
    switch (ri.kind) {
      case 0: d.f[ri.i].push_back(y); break;
      case 1: d.g[ri.i][ri.key[0]] = y; break;
      case 2: amult[ri.i][ri.t - 2][ri.key] = y; break;
      default: lambda = y; break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    for (int t = 2; t <= T; ++t) {
      auto [pf, pl] = m.nodes_at(t - 1);
      for (std::size_t p = pf; p < pl; ++p) {
        auto [cb, ce] = m.children(p);
        for (std::size_t w = 0; w < nclass[t - 2]; ++w) {
          double mean = 0.0;
          std::vector<double> av(ce - cb, 0.0);
          for (std::size_t u = cb; u + 1 < ce; ++u) av[u - cb] = amult[i][t - 2][{u, w}];
          for (std::size_t u = cb; u < ce; ++u) mean += m.cond_prob(u) * av[u - cb];
          for (std::size_t u = cb; u < ce; ++u) d.compensators[i][t - 2][{u, w}] = av[u - cb] - mean;
        }
      }
    }
  }
  // move lambda into the f^i, then make sum_i g^i vanish by lowering each g^i
  const double share = lambda / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : d.f[i]) v += share;
    for (double& v : d.g[i]) v -= share;
  }
  for (std::size_t a = 0; a < na; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += d.g[i][a];
    for (std::size_t i = 0; i < n; ++i) d.g[i][a] -= s / static_cast<double>(n);
  }
  d.value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    auto [first, last] = m.nodes_at(1);
    for (std::size_t u = first; u < last; ++u) d.value += m.prob(u) * d.f[i][u - first];
  }

  const BarycenterDualReport rep = verify_barycenter_dual(d, ms, costs, A, res.value);
  if (!rep.ok) fail(ErrorCode::DualVerificationFailed, "barycenter dual: " + rep.witness);

  res.nu = build_nu(A, res.weights, res.nu_leaf);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<CouplingEntry> entries;
    for (std::size_t x = 0; x < ms[i]->num_leaves(); ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        const double mass = res.lp.x[offset[i] + x * na + a];
        if (mass > 0.0 && res.nu_leaf[a] != FilteredProcess::npos) entries.push_back({{x, res.nu_leaf[a]}, mass});
      }
    }
    res.couplings.emplace_back(std::vector<ProcessPtr>{ms[i], res.nu}, std::move(entries));
  }
  return res;
}

BarycenterDualReport verify_barycenter_dual(const BarycenterDual& d, const std::vector<ProcessPtr>& ms,
                                            const std::vector<CostFunction>& costs, const CandidateSupport& A,
                                            double primal_value) {
  BarycenterDualReport r;
  const std::size_t n = ms.size();
  const std::size_t na = A.paths.size();
  const int T = A.horizon;
  const auto classes = prefix_classes(A);
  std::ostringstream why;

  for (std::size_t a = 0; a < na; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += d.g[i][a];
    if (std::fabs(s) > r.max_congruency) {
      r.max_congruency = std::fabs(s);
      if (r.max_congruency > 1e-8) why << "sum of g at candidate '" << A.paths[a].id << "' is " << s << "; ";
    }
  }
  r.max_excess = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    for (std::size_t x = 0; x < m.num_leaves(); ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        double s = d.f[i][m.layer_index(m.ancestor(x, 1))] + d.g[i][a];
        for (int t = 2; t <= T; ++t) {
          auto it = d.compensators[i][t - 2].find({m.ancestor(x, t), classes[t - 2][a]});
          if (it != d.compensators[i][t - 2].end()) s += it->second;
        }
        const PathRef paths[2] = {m.leaf_path(x), A.path(a)};
        const double ex = s - costs[i](paths);
        if (ex > r.max_excess) {
          r.max_excess = ex;
          if (ex > 1e-7) {
            why << "marginal " << i << " leaf '" << m.leaf_id(x) << "' candidate '" << A.paths[a].id
                << "' exceeds cost by " << ex << "; ";
          }
        }
      }
    }
    for (int t = 2; t <= T; ++t) {
      std::map<std::vector<std::size_t>, double> mean;
      for (const auto& [key, v] : d.compensators[i][t - 2]) {
        mean[{m.parent(key[0]), key[1]}] += m.cond_prob(key[0]) * v;
      }
      for (const auto& [k, v] : mean) r.max_compensator_mean = std::max(r.max_compensator_mean, std::fabs(v));
    }
  }
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    auto [first, last] = m.nodes_at(1);
    for (std::size_t u = first; u < last; ++u) value += m.prob(u) * d.f[i][u - first];
  }
  r.value_gap = std::max(std::fabs(value - primal_value), std::fabs(d.value - value));
  if (r.max_compensator_mean > 1e-9) why << "compensator mean " << r.max_compensator_mean << "; ";
  if (r.value_gap > 1e-7) why << "dual value off by " << r.value_gap << "; ";
  r.ok = r.max_congruency <= 1e-8 && r.max_excess <= 1e-7 && r.max_compensator_mean <= 1e-9 &&
         r.value_gap <= 1e-7;
  r.witness = why.str();
  return r;
}

double causal_objective_at(const std::vector<ProcessPtr>& ms, const std::vector<CostFunction>& costs,
                           const CandidateSupport& A, const std::vector<double>& weights) {
  validate_support(A);
  std::vector<std::size_t> leaf_of;
  const ProcessPtr nu = build_nu(A, weights, leaf_of);
  double total = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    total += solve_adapted_lp({ms[i], nu}, costs[i], Mode::causal).value;
  }
  return total;
}

SearchResult bicausal_barycenter_search(const std::vector<ProcessPtr>& ms, const std::vector<CostFunction>& costs,
                                        const std::vector<ProcessPtr>& candidates, const DPOptions& opts) {
  if (candidates.empty()) fail(ErrorCode::EmptySupport, "no candidate processes");
  if (costs.size() != ms.size()) fail(ErrorCode::MalformedInput, "need one cost per marginal");
  SearchResult r;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    double v = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) v += value_process(ms[i], candidates[k], costs[i], opts).v0;
    r.values.push_back(v);
    if (k == 0 || v < r.value) {
      r.value = v;
      r.best = k;
    }
  }
  return r;
}

}  // namespace adot
