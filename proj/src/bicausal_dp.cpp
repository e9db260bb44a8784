#include "adot/bicausal_dp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "adot/errors.hpp"
#include "parallel.hpp"

namespace adot {

double ValueProcess::at(int t, std::size_t x_pos, std::size_t y_pos) const {
  if (t == 0) return v0;
  return tables[t - 1][x->layer_index(x_pos) * y->count_at(t) + y->layer_index(y_pos)];
}

namespace {

// Children of a prefix at depth s (s = 0 is the empty prefix): positions and
// conditional probabilities.
void step_law(const FilteredProcess& p, int s, std::size_t pos, std::vector<std::size_t>& kids,
              std::vector<double>& probs) {
  kids.clear();
  probs.clear();
  std::size_t first, last;
  if (s == 0) {
    std::tie(first, last) = p.nodes_at(1);
  } else {
    std::tie(first, last) = p.children(pos);
  }
  for (std::size_t c = first; c < last; ++c) {
    kids.push_back(c);
    probs.push_back(p.cond_prob(c));
  }
}

std::size_t pairs_at(const FilteredProcess& x, const FilteredProcess& y, int s) {
  return s == 0 ? 1 : x.count_at(s) * y.count_at(s);
}

struct DPRun {
  ValueProcess vp;
  std::vector<std::vector<LocalStep>> steps;
  std::size_t iterations = 0;
  double max_gap = 0.0;
};

DPRun run_dp(const ProcessPtr& xp, const ProcessPtr& yp, const CostFunction& c, const DPOptions& opts) {
  const FilteredProcess& X = *xp;
  const FilteredProcess& Y = *yp;
  if (X.horizon() != Y.horizon()) fail(ErrorCode::HorizonMismatch, "processes have different horizons");
  const int T = X.horizon();
  DPRun run;
  run.vp.x = xp;
  run.vp.y = yp;
  run.vp.tables.resize(static_cast<std::size_t>(T));
  run.steps.resize(static_cast<std::size_t>(T));

  // V_T from the cost on leaf pairs
  {
    const std::size_t nx = X.num_leaves(), ny = Y.num_leaves();
    std::vector<double>& vt = run.vp.tables[T - 1];
    vt.assign(nx * ny, 0.0);
    const ProcessPtr ms[] = {xp, yp};
    detail::parallel_for(nx, opts.threads, [&](std::size_t a) {
      std::size_t tuple[2] = {a, 0};
      for (std::size_t b = 0; b < ny; ++b) {
        tuple[1] = b;
        vt[a * ny + b] = evaluate_cost(c, ms, tuple);
      }
    });
  }

  for (int s = T - 1; s >= 0; --s) {
    const std::size_t npairs = pairs_at(X, Y, s);
    const std::size_t ny_s = s == 0 ? 1 : Y.count_at(s);
    const std::size_t ny_next = Y.count_at(s + 1);
    const std::vector<double>& next = run.vp.tables[s];
    std::vector<LocalStep>& layer = run.steps[s];
    layer.assign(npairs, LocalStep{});
    std::vector<double> values(npairs, 0.0);
    detail::parallel_for(npairs, opts.threads, [&](std::size_t k) {
      const std::size_t xu = s == 0 ? 0 : X.position(s, k / ny_s);
      const std::size_t yv = s == 0 ? 0 : Y.position(s, k % ny_s);
      std::vector<std::size_t> xk, yk;
      std::vector<double> px, py;
      step_law(X, s, xu, xk, px);
      step_law(Y, s, yv, yk, py);
      std::vector<double> cost(xk.size() * yk.size());
      for (std::size_t a = 0; a < xk.size(); ++a) {
        for (std::size_t b = 0; b < yk.size(); ++b) {
          cost[a * yk.size() + b] = next[X.layer_index(xk[a]) * ny_next + Y.layer_index(yk[b])];
        }
      }
      layer[k].transport = solve_transport(px, py, cost, opts.simplex);
      values[k] = layer[k].transport.value;
    });
    for (const LocalStep& st : layer) {
      run.iterations += st.transport.iterations;
      run.max_gap = std::max(run.max_gap, st.transport.gap);
    }
    if (s == 0) {
      run.vp.v0 = values[0];
    } else {
      run.vp.tables[s - 1] = std::move(values);
    }
  }
  return run;
}

}  // namespace

BicausalSolution solve_bicausal(const ProcessPtr& x, const ProcessPtr& y, const CostFunction& c,
                                const DPOptions& opts) {
  DPRun run = run_dp(x, y, c, opts);
  const FilteredProcess& X = *x;
  const FilteredProcess& Y = *y;
  const int T = X.horizon();

  // glue the local plans forward from the empty prefix
  std::map<std::pair<std::size_t, std::size_t>, double> mass{{{0, 0}, 1.0}};
  for (int s = 0; s < T; ++s) {
    std::map<std::pair<std::size_t, std::size_t>, double> next;
    const std::size_t ny_s = s == 0 ? 1 : Y.count_at(s);
    for (const auto& [pair, m] : mass) {
      const std::size_t k = s == 0 ? 0 : X.layer_index(pair.first) * ny_s + Y.layer_index(pair.second);
      std::vector<std::size_t> xk, yk;
      std::vector<double> px, py;
      step_law(X, s, pair.first, xk, px);
      step_law(Y, s, pair.second, yk, py);
      const std::vector<double>& plan = run.steps[s][k].transport.plan;
      for (std::size_t a = 0; a < xk.size(); ++a) {
        for (std::size_t b = 0; b < yk.size(); ++b) {
          const double w = plan[a * yk.size() + b];
          if (w > 0.0) next[{xk[a], yk[b]}] += m * w;
        }
      }
    }
    mass = std::move(next);
  }
  std::vector<CouplingEntry> entries;
  entries.reserve(mass.size());
  for (const auto& [pair, m] : mass) {
    entries.push_back({{X.layer_index(pair.first), Y.layer_index(pair.second)}, m});
  }

  BicausalSolution sol;
  sol.value = run.vp.v0;
  sol.value_process = std::move(run.vp);
  sol.coupling = Coupling({x, y}, std::move(entries));
  sol.steps = std::move(run.steps);
  sol.lp_iterations = run.iterations;
  sol.max_local_gap = run.max_gap;
  return sol;
}

ValueProcess value_process(const ProcessPtr& x, const ProcessPtr& y, const CostFunction& c,
                           const DPOptions& opts) {
  return run_dp(x, y, c, opts).vp;
}

namespace {

bool same_process(const ProcessPtr& a, const ProcessPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->num_nodes() != b->num_nodes() || a->horizon() != b->horizon()) return false;
  for (std::size_t pos = 0; pos < a->num_nodes(); ++pos) {
    if (a->id(pos) != b->id(pos) || a->time(pos) != b->time(pos)) return false;
  }
  return true;
}

}  // namespace

CouplingReport verify_value_martingale(const ValueProcess& v, const Coupling& pi, MartingaleMode mode,
                                       double tol) {
  CouplingReport r;
  r.mode = Mode::bicausal;
  if (pi.arity() != 2 || !same_process(pi.marginals()[0], v.x) || !same_process(pi.marginals()[1], v.y)) {
    fail(ErrorCode::MarginalMismatch, "coupling marginals differ from the value process");
  }
  const int T = v.x->horizon();
  for (int t = 0; t < T; ++t) {
    const OneStepLaws laws = disintegrate_coupling(pi, t + 1);
    for (const auto& [prefix, law] : laws) {
      const double vt = t == 0 ? v.v0 : v.at(t, prefix[0], prefix[1]);
      double e = 0.0;
      for (const auto& [child, p] : law) e += p * v.at(t + 1, child[0], child[1]);
      const double dev = mode == MartingaleMode::martingale ? std::fabs(e - vt) : vt - e;
      if (dev > r.worst_violation) {
        r.worst_violation = dev;
        std::ostringstream os;
        os.precision(17);
        os << "t=" << t;
        if (t > 0) os << " prefix (" << v.x->id(prefix[0]) << "," << v.y->id(prefix[1]) << ")";
        os << ": V_t=" << vt << " E[V_t+1]=" << e;
        r.witness = os.str();
      }
    }
  }
  r.ok = r.worst_violation <= tol;
  return r;
}

DualPotential dual_from_value(const BicausalSolution& sol, const CostFunction& c) {
  const ProcessPtr& xp = sol.value_process.x;
  const ProcessPtr& yp = sol.value_process.y;
  const FilteredProcess& X = *xp;
  const FilteredProcess& Y = *yp;
  const int T = X.horizon();

  DualPotential d;
  d.mode = Mode::bicausal;
  d.marginals = {xp, yp};
  d.initial = {sol.steps[0][0].transport.phi, sol.steps[0][0].transport.psi};
  d.terminal.assign(2, {});
  d.compensators.assign(2, std::vector<std::map<std::vector<std::size_t>, double>>(
                               static_cast<std::size_t>(std::max(0, T - 1))));

  for (int s = 1; s < T; ++s) {
    const std::size_t ny_s = Y.count_at(s);
    auto& fx = d.compensators[0][s - 1];
    auto& gy = d.compensators[1][s - 1];
    for (std::size_t k = 0; k < sol.steps[s].size(); ++k) {
      const std::size_t xu = X.position(s, k / ny_s);
      const std::size_t yv = Y.position(s, k % ny_s);
      const TransportResult& tr = sol.steps[s][k].transport;
      auto [xb, xe] = X.children(xu);
      auto [yb, ye] = Y.children(yv);
      double mphi = 0.0, mpsi = 0.0;
      for (std::size_t a = xb; a < xe; ++a) mphi += X.cond_prob(a) * tr.phi[a - xb];
      for (std::size_t b = yb; b < ye; ++b) mpsi += Y.cond_prob(b) * tr.psi[b - yb];
      for (std::size_t a = xb; a < xe; ++a) fx[{a, yv}] = tr.phi[a - xb] - mphi;
      for (std::size_t b = yb; b < ye; ++b) gy[{b, xu}] = tr.psi[b - yb] - mpsi;
    }
  }
  d.value = d.dual_value();

  const DualValueCheck chk = check_dual_against_value(d, sol, c);
  std::ostringstream os;
  if (chk.max_compensator_mean > 1e-9) os << "compensator mean " << chk.max_compensator_mean << "; ";
  if (chk.max_excess > 1e-7) os << "s exceeds c by " << chk.max_excess << "; ";
  if (chk.value_gap > 1e-8) os << "dual value differs from V_0 by " << chk.value_gap << "; ";
  if (chk.max_running_gap > 1e-7) os << "running value differs from V by " << chk.max_running_gap << "; ";
  if (!os.str().empty()) fail(ErrorCode::DualVerificationFailed, os.str());
  return d;
}

DualValueCheck check_dual_against_value(const DualPotential& d, const BicausalSolution& sol,
                                        const CostFunction& c) {
  DualValueCheck chk;
  const FilteredProcess& X = *d.marginals[0];
  const FilteredProcess& Y = *d.marginals[1];
  const int T = X.horizon();
  chk.max_compensator_mean = max_compensator_mean(d);
  chk.value_gap = std::fabs(d.dual_value() - sol.value_process.v0);
  chk.max_excess = -INFINITY;
  std::size_t tuple[2];
  for (std::size_t a = 0; a < X.num_leaves(); ++a) {
    for (std::size_t b = 0; b < Y.num_leaves(); ++b) {
      tuple[0] = a;
      tuple[1] = b;
      chk.max_excess = std::max(chk.max_excess, d.evaluate(tuple) - evaluate_cost(c, d.marginals, tuple));
    }
  }
  for (const CouplingEntry& e : sol.coupling.entries()) {
    for (int t = 1; t <= T; ++t) {
      const double m = d.running_value(e.leaves, t);
      const double v = sol.value_process.at(t, X.ancestor(e.leaves[0], t), Y.ancestor(e.leaves[1], t));
      chk.max_running_gap = std::max(chk.max_running_gap, std::fabs(m - v));
    }
  }
  return chk;
}

std::vector<double> lipschitz_estimates(const ValueProcess& v) {
  const FilteredProcess& X = *v.x;
  const FilteredProcess& Y = *v.y;
  const int T = X.horizon();
  std::vector<double> out(static_cast<std::size_t>(T), 0.0);
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::fabs(a[k] - b[k]);
    return s;
  };
  for (int t = 1; t <= T; ++t) {
    auto [xf, xl] = X.nodes_at(t);
    auto [yf, yl] = Y.nodes_at(t);
    double best = 0.0;
    for (std::size_t u = xf; u < xl; ++u) {
      for (std::size_t w = u + 1; w < xl && X.parent(w) == X.parent(u); ++w) {
        const double dx = dist(X.value(u), X.value(w));
        if (dx < 1e-12) continue;
        for (std::size_t y = yf; y < yl; ++y) {
          best = std::max(best, std::fabs(v.at(t, u, y) - v.at(t, w, y)) / dx);
        }
      }
    }
    for (std::size_t u = yf; u < yl; ++u) {
      for (std::size_t w = u + 1; w < yl && Y.parent(w) == Y.parent(u); ++w) {
        const double dy = dist(Y.value(u), Y.value(w));
        if (dy < 1e-12) continue;
        for (std::size_t x = xf; x < xl; ++x) {
          best = std::max(best, std::fabs(v.at(t, x, u) - v.at(t, x, w)) / dy);
        }
      }
    }
    out[t - 1] = best;
  }
  return out;
}

}  // namespace adot
