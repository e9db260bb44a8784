#include "adot/dual.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace adot {

namespace {

void compensator_key(const DualPotential& d, std::size_t own, int t,
                     std::span<const std::size_t> leaves, std::vector<std::size_t>& key) {
  key.clear();
  key.push_back(d.marginals[own]->ancestor(leaves[own], t));
  for (std::size_t j = 0; j < d.marginals.size(); ++j) {
    if (j != own) key.push_back(d.marginals[j]->ancestor(leaves[j], t - 1));
  }
}

// Visits every conditioning index of compensator (own, t): the own parent
// node and the others' prefix, with the keys of all children.
template <class F>
void for_each_group(const DualPotential& d, std::size_t own, int t, F&& f) {
  const auto& table = d.compensators[own][t - 2];
  const FilteredProcess& mine = *d.marginals[own];
  std::map<std::vector<std::size_t>, bool> seen;
  for (const auto& [key, v] : table) {
    std::vector<std::size_t> group = key;
    group[0] = mine.parent(key[0]);
    if (!seen.emplace(group, true).second) continue;
    f(group);
  }
}

}  // namespace

double DualPotential::running_value(std::span<const std::size_t> leaves, int t) const {
  double s = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    if (!initial[i].empty()) s += initial[i][marginals[i]->layer_index(marginals[i]->ancestor(leaves[i], 1))];
  }
  const int T = marginals[0]->horizon();
  if (t >= T) {
    for (std::size_t i = 0; i < marginals.size(); ++i) {
      if (!terminal[i].empty()) s += terminal[i][leaves[i]];
    }
  }
  std::vector<std::size_t> key;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    if (compensators[i].empty()) continue;
    for (int u = 2; u <= std::min(t, T); ++u) {
      compensator_key(*this, i, u, leaves, key);
      const auto& table = compensators[i][u - 2];
      auto it = table.find(key);
      if (it != table.end()) s += it->second;
    }
  }
  return s;
}

double DualPotential::evaluate(std::span<const std::size_t> leaves) const {
  return running_value(leaves, marginals[0]->horizon());
}

double DualPotential::dual_value() const {
  double v = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const FilteredProcess& m = *marginals[i];
    if (!initial[i].empty()) {
      auto [first, last] = m.nodes_at(1);
      for (std::size_t pos = first; pos < last; ++pos) v += m.prob(pos) * initial[i][pos - first];
    }
    if (!terminal[i].empty()) {
      for (std::size_t l = 0; l < m.num_leaves(); ++l) v += m.leaf_prob(l) * terminal[i][l];
    }
  }
  return v;
}

double max_compensator_mean(const DualPotential& d) {
  double worst = 0.0;
  for (std::size_t i = 0; i < d.compensators.size(); ++i) {
    const FilteredProcess& mine = *d.marginals[i];
    for (std::size_t k = 0; k < d.compensators[i].size(); ++k) {
      const int t = static_cast<int>(k) + 2;
      const auto& table = d.compensators[i][k];
      for_each_group(d, i, t, [&](const std::vector<std::size_t>& group) {
        std::vector<std::size_t> key = group;
        double mean = 0.0;
        auto [cb, ce] = mine.children(group[0]);
        for (std::size_t c = cb; c < ce; ++c) {
          key[0] = c;
          auto it = table.find(key);
          if (it != table.end()) mean += mine.cond_prob(c) * it->second;
        }
        worst = std::max(worst, std::fabs(mean));
      });
    }
  }
  return worst;
}

void recenter_compensators(DualPotential& d) {
  for (std::size_t i = 0; i < d.compensators.size(); ++i) {
    const FilteredProcess& mine = *d.marginals[i];
    for (std::size_t k = 0; k < d.compensators[i].size(); ++k) {
      const int t = static_cast<int>(k) + 2;
      auto& table = d.compensators[i][k];
      std::vector<std::vector<std::size_t>> groups;
      for_each_group(d, i, t, [&](const std::vector<std::size_t>& g) { groups.push_back(g); });
      for (const auto& group : groups) {
        std::vector<std::size_t> key = group;
        double mean = 0.0;
        auto [cb, ce] = mine.children(group[0]);
        for (std::size_t c = cb; c < ce; ++c) {
          key[0] = c;
          mean += mine.cond_prob(c) * table[key];
        }
        for (std::size_t c = cb; c < ce; ++c) {
          key[0] = c;
          table[key] -= mean;
        }
      }
    }
  }
}

DualCheck verify_dual(const DualPotential& dual, const CostFunction& c, double target,
                      double feas_tol, double mean_tol, double value_tol) {
  DualCheck r;
  const ProductIndexer idx = leaf_indexer(dual.marginals);
  std::vector<std::size_t> tuple(dual.marginals.size());
  r.max_excess = -INFINITY;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    idx.unflat(k, tuple);
    const double excess = dual.evaluate(tuple) - evaluate_cost(c, dual.marginals, tuple);
    if (excess > r.max_excess) {
      r.max_excess = excess;
      if (excess > feas_tol) {
        std::ostringstream os;
        os << "s exceeds c by " << excess << " at (";
        for (std::size_t i = 0; i < tuple.size(); ++i) {
          os << (i ? "," : "") << dual.marginals[i]->leaf_id(tuple[i]);
        }
        os << ")";
        r.witness = os.str();
      }
    }
  }
  r.max_compensator_mean = max_compensator_mean(dual);
  r.value_gap = std::fabs(dual.dual_value() - target);
  if (r.max_compensator_mean > mean_tol && r.witness.empty()) r.witness = "compensator mean not zero";
  if (r.value_gap > value_tol && r.witness.empty()) r.witness = "dual value differs from primal";
  r.ok = r.max_excess <= feas_tol && r.max_compensator_mean <= mean_tol && r.value_gap <= value_tol;
  return r;
}

}  // namespace adot
