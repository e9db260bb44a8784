#include "adot/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adot/errors.hpp"

namespace adot {

namespace {

void require_scalar_martingales(const std::vector<ProcessPtr>& ms) {
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i]->dimension() != 1) {
      fail(ErrorCode::PreconditionViolation, "asset " + std::to_string(i) + " is not one-dimensional");
    }
    const MartingaleReport mr = is_martingale(*ms[i]);
    if (!mr.ok) {
      std::ostringstream os;
      os << "asset " << i << " is not a martingale (" << mr.witness << ", deviation "
         << mr.worst_violation << ")";
      fail(ErrorCode::NotMartingaleMarginal, os.str());
    }
  }
}

double initial_mean(const FilteredProcess& m) {
  auto [first, last] = m.nodes_at(1);
  double s = 0.0;
  for (std::size_t pos = first; pos < last; ++pos) s += m.prob(pos) * m.value(pos)[0];
  return s;
}

// Delta with Delta * (v_c - v) = h_c for every child c.
double solve_node(double v, const std::vector<double>& vals, const std::vector<double>& h,
                  bool allow_least_squares, const std::string& where) {
  double delta = 0.0;
  if (vals.size() == 2) {
    const double dv = vals[0] - vals[1];
    if (std::fabs(dv) > 1e-12) delta = (h[0] - h[1]) / dv;
  } else if (vals.size() > 2) {
    if (!allow_least_squares) {
      fail(ErrorCode::IncompleteMarket, where + " has " + std::to_string(vals.size()) + " children");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      num += (vals[k] - v) * h[k];
      den += (vals[k] - v) * (vals[k] - v);
    }
    if (den > 0.0) delta = num / den;
  }
  double residual = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    residual = std::max(residual, std::fabs(delta * (vals[k] - v) - h[k]));
  }
  if (residual > 1e-7) {
    std::ostringstream os;
    os << where << ": increment not representable by trading (residual " << residual << ")";
    fail(ErrorCode::IncompleteMarket, os.str());
  }
  return delta;
}

}  // namespace

void validate_payoff(const Payoff& payoff, const std::vector<ProcessPtr>& ms) {
  if (payoff.bounds.empty()) return;
  if (payoff.bounds.size() != ms.size()) {
    fail(ErrorCode::MalformedInput, "payoff bounds need one table per marginal");
  }
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (payoff.bounds[i].size() != ms[i]->num_leaves()) {
      fail(ErrorCode::MalformedInput, "payoff bound table has wrong size");
    }
  }
  const ProductIndexer idx = leaf_indexer(ms);
  std::vector<std::size_t> tuple(ms.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    idx.unflat(k, tuple);
    double bound = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) bound += payoff.bounds[i][tuple[i]];
    if (evaluate_cost(payoff.xi, ms, tuple) > bound + kInputTol) {
      fail(ErrorCode::PreconditionViolation, "payoff exceeds its bound witnesses");
    }
  }
}

NAReport check_na(const Coupling& pi, double tol) {
  const auto& ms = pi.marginals();
  require_scalar_martingales(ms);
  const int T = ms[0]->horizon();
  NAReport r;
  std::vector<double> x0(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) x0[i] = initial_mean(*ms[i]);
  for (int t = 0; t < T; ++t) {
    for (const auto& [prefix, law] : disintegrate_coupling(pi, t + 1)) {
      for (std::size_t i = 0; i < ms.size(); ++i) {
        double mean = 0.0;
        for (const auto& [child, p] : law) mean += p * ms[i]->value(child[i])[0];
        const double now = t == 0 ? x0[i] : ms[i]->value(prefix[i])[0];
        const double dev = std::fabs(mean - now);
        if (dev > r.martingale_violation) {
          r.martingale_violation = dev;
          r.witness = "asset " + std::to_string(i) + " drifts at t=" + std::to_string(t);
        }
      }
    }
  }
  r.joint_martingale = r.martingale_violation <= tol;
  if (ms.size() >= 2) {
    const CouplingReport cr = check_coupling(pi, Mode::multicausal, tol);
    r.multicausal = cr.ok;
    r.causality_violation = cr.worst_violation;
  } else {
    r.multicausal = true;
  }
  r.agree = r.joint_martingale == r.multicausal;
  return r;
}

PriceResult superhedge_price(const std::vector<ProcessPtr>& ms, const Payoff& payoff) {
  require_scalar_martingales(ms);
  validate_payoff(payoff, ms);
  PriceResult out;
  out.lp = solve_adapted_lp(ms, negated(payoff.xi), Mode::multicausal);
  out.price = -out.lp.value;
  out.worst_case_model = out.lp.coupling;
  return out;
}

double strategy_value(const Strategy& s, const std::vector<ProcessPtr>& ms,
                      const std::vector<std::size_t>& leaves) {
  const int T = ms[0]->horizon();
  const std::size_t n = ms.size();
  double g = s.p0;
  const std::vector<double>& d0 = s.delta[0].at({});
  for (std::size_t i = 0; i < n; ++i) {
    g += d0[i] * (ms[i]->value(ms[i]->ancestor(leaves[i], 1))[0] - s.x0[i]);
  }
  std::vector<std::size_t> prefix(n);
  for (int t = 1; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) prefix[i] = ms[i]->ancestor(leaves[i], t);
    const std::vector<double>& dt = s.delta[t].at(prefix);
    for (std::size_t i = 0; i < n; ++i) {
      const double step = ms[i]->value(ms[i]->ancestor(leaves[i], t + 1))[0] - ms[i]->value(prefix[i])[0];
      g += dt[i] * step;
    }
  }
  return g;
}

Strategy extract_strategy(const std::vector<ProcessPtr>& ms, const DualPotential& dual,
                          bool allow_least_squares) {
  require_scalar_martingales(ms);
  if (dual.mode != Mode::multicausal || dual.marginals.size() != ms.size()) {
    fail(ErrorCode::PreconditionViolation, "strategy extraction needs a multicausal dual");
  }
  const std::size_t n = ms.size();
  const int T = ms[0]->horizon();
  Strategy s;
  s.p0 = -dual.dual_value();
  s.x0.resize(n);
  s.delta.resize(static_cast<std::size_t>(T));

  // t = 0: the time-1 potentials, centred, against the move from x0
  std::vector<double>& d0 = s.delta[0][{}];
  d0.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    s.x0[i] = initial_mean(m);
    auto [first, last] = m.nodes_at(1);
    double mean = 0.0;
    for (std::size_t pos = first; pos < last; ++pos) mean += m.prob(pos) * dual.initial[i][pos - first];
    std::vector<double> vals, h;
    for (std::size_t pos = first; pos < last; ++pos) {
      vals.push_back(m.value(pos)[0]);
      h.push_back(mean - dual.initial[i][pos - first]);
    }
    d0[i] = solve_node(s.x0[i], vals, h, allow_least_squares, "asset " + std::to_string(i) + " at t=0");
  }

  for (int t = 1; t < T; ++t) {
    std::vector<std::vector<std::size_t>> prefixes{{}};
    for (std::size_t i = 0; i < n; ++i) {
      auto [first, last] = ms[i]->nodes_at(t);
      std::vector<std::vector<std::size_t>> next;
      for (const auto& p : prefixes) {
        for (std::size_t pos = first; pos < last; ++pos) {
          next.push_back(p);
          next.back().push_back(pos);
        }
      }
      prefixes = std::move(next);
    }
    const auto& tables = dual.compensators;
    for (const auto& prefix : prefixes) {
      std::vector<double> dt(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const FilteredProcess& m = *ms[i];
        std::vector<std::size_t> key{0};
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) key.push_back(prefix[j]);
        }
        auto [cb, ce] = m.children(prefix[i]);
        std::vector<double> vals, h;
        for (std::size_t c = cb; c < ce; ++c) {
          key[0] = c;
          auto it = tables[i][t - 1].find(key);
          vals.push_back(m.value(c)[0]);
          h.push_back(it == tables[i][t - 1].end() ? 0.0 : -it->second);
        }
        dt[i] = solve_node(m.value(prefix[i])[0], vals, h, allow_least_squares,
                           "asset " + std::to_string(i) + " node '" + m.id(prefix[i]) + "'");
      }
      s.delta[t][prefix] = std::move(dt);
    }
  }
  return s;
}

SuperhedgeReport verify_superhedge(const Strategy& s, const std::vector<ProcessPtr>& ms,
                                   const CostFunction& xi, const Coupling* model, double tol) {
  SuperhedgeReport r;
  const ProductIndexer idx = leaf_indexer(ms);
  std::vector<std::size_t> tuple(ms.size());
  r.min_slack = INFINITY;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    idx.unflat(k, tuple);
    const double slack = strategy_value(s, ms, tuple) - evaluate_cost(xi, ms, tuple);
    if (slack < r.min_slack) {
      r.min_slack = slack;
      if (slack < -tol) {
        std::string ids;
        for (std::size_t i = 0; i < tuple.size(); ++i) ids += (i ? "," : "") + ms[i]->leaf_id(tuple[i]);
        std::ostringstream os;
        os << "payoff exceeds portfolio by " << -slack << " at (" << ids << ")";
        r.witness = os.str();
      }
    }
  }
  r.dominates = r.min_slack >= -tol;
  if (model != nullptr) {
    double expectation = 0.0;
    for (const CouplingEntry& e : model->entries()) {
      const double x = evaluate_cost(xi, ms, e.leaves);
      expectation += e.mass * x;
      const double gap = std::fabs(strategy_value(s, ms, e.leaves) - x);
      r.max_support_gap = std::max(r.max_support_gap, gap);
    }
    r.expectation_gap = std::fabs(s.p0 - expectation);
    r.replicates = r.max_support_gap <= tol && r.expectation_gap <= tol;
    if (!r.replicates && r.witness.empty()) r.witness = "portfolio differs from payoff on the model support";
  }
  r.ok = r.dominates && r.replicates;
  return r;
}

}  // namespace adot
