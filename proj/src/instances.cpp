#include "adot/instances.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "adot/errors.hpp"

namespace adot::instances {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

namespace {

std::vector<double> random_probs(Rng& rng, int k) {
  std::vector<double> w(static_cast<std::size_t>(k));
  double s = 0.0;
  for (double& v : w) {
    v = uniform(rng, 0.2, 1.0);
    s += v;
  }
  for (double& v : w) v /= s;
  return w;
}

double grid_value(Rng& rng) { return 0.5 * uniform_int(rng, -4, 4); }

}  // namespace

ProcessPtr random_tree(Rng& rng, int horizon, int max_children, int dimension, const std::string& prefix) {
  std::vector<NodeSpec> nodes;
  int counter = 0;
  std::function<void(int, const std::optional<std::string>&)> grow =
      [&](int t, const std::optional<std::string>& parent) {
        const int k = uniform_int(rng, 1, max_children);
        const std::vector<double> probs = random_probs(rng, k);
        for (int c = 0; c < k; ++c) {
          NodeSpec s;
          s.id = prefix + std::to_string(counter++);
          s.t = t;
          for (int j = 0; j < dimension; ++j) s.value.push_back(grid_value(rng));
          s.prob = probs[c];
          s.parent = parent;
          nodes.push_back(s);
          if (t < horizon) grow(t + 1, s.id);
        }
      };
  grow(1, std::nullopt);
  return FilteredProcess::build(dimension, horizon, std::move(nodes));
}

ProcessPtr random_tree_with_repeats(Rng& rng, int horizon, int max_children, const std::string& prefix) {
  // subtrees are generated as nested descriptions first so copies are exact
  struct Sub {
    double value = 0.0;
    std::vector<std::pair<double, Sub>> kids;  // (weight, subtree)
  };
  std::function<Sub(int)> make = [&](int t) {
    Sub s;
    s.value = uniform_int(rng, 0, 1);
    if (t == horizon) return s;
    const int k = uniform_int(rng, 1, max_children);
    for (int c = 0; c < k; ++c) {
      const double w = uniform(rng, 0.2, 1.0);
      if (c > 0 && uniform(rng, 0.0, 1.0) < 0.4) {
        s.kids.emplace_back(w, s.kids[static_cast<std::size_t>(uniform_int(rng, 0, c - 1))].second);
      } else {
        s.kids.emplace_back(w, make(t + 1));
      }
    }
    return s;
  };
  std::vector<std::pair<double, Sub>> roots;
  const int k = uniform_int(rng, 1, max_children);
  for (int c = 0; c < k; ++c) {
    const double w = uniform(rng, 0.2, 1.0);
    if (c > 0 && uniform(rng, 0.0, 1.0) < 0.4) {
      roots.emplace_back(w, roots[static_cast<std::size_t>(uniform_int(rng, 0, c - 1))].second);
    } else {
      roots.emplace_back(w, make(1));
    }
  }
  std::vector<NodeSpec> nodes;
  int counter = 0;
  std::function<void(const std::vector<std::pair<double, Sub>>&, int, const std::optional<std::string>&)> emit =
      [&](const std::vector<std::pair<double, Sub>>& kids, int t, const std::optional<std::string>& parent) {
        double total = 0.0;
        for (const auto& [w, sub] : kids) total += w;
        for (const auto& [w, sub] : kids) {
          NodeSpec s;
          s.id = prefix + std::to_string(counter++);
          s.t = t;
          s.value = {sub.value};
          s.prob = w / total;
          s.parent = parent;
          nodes.push_back(s);
          if (!sub.kids.empty()) emit(sub.kids, t + 1, s.id);
        }
      };
  emit(roots, 1, std::nullopt);
  return FilteredProcess::build(1, horizon, std::move(nodes));
}

ProcessPtr random_binomial_martingale(Rng& rng, int horizon, const std::string& prefix) {
  std::vector<NodeSpec> nodes;
  int counter = 0;
  std::function<void(int, double, const std::optional<std::string>&)> grow =
      [&](int t, double v, const std::optional<std::string>& parent) {
        const double up = 0.25 * uniform_int(rng, 2, 8);
        const double down = 0.25 * uniform_int(rng, 2, 8);
        const double p_up = down / (up + down);
        const double vals[2] = {v + up, v - down};
        const double probs[2] = {p_up, 1.0 - p_up};
        for (int c = 0; c < 2; ++c) {
          NodeSpec s;
          s.id = prefix + std::to_string(counter++);
          s.t = t;
          s.value = {vals[c]};
          s.prob = probs[c];
          s.parent = parent;
          nodes.push_back(s);
          if (t < horizon) grow(t + 1, vals[c], s.id);
        }
      };
  grow(1, 0.0, std::nullopt);
  return FilteredProcess::build(1, horizon, std::move(nodes));
}

namespace {

// Multi-marginal north-west corner rule along the given atom orders.
void north_west(const std::vector<std::vector<double>>& laws, const std::vector<std::vector<std::size_t>>& order,
                const ProductIndexer& idx, double weight, std::vector<double>& out) {
  const std::size_t n = laws.size();
  std::vector<double> rem(n);
  std::vector<std::size_t> at(n, 0), tuple(n);
  for (std::size_t i = 0; i < n; ++i) rem[i] = laws[i][order[i][0]];
  for (;;) {
    double m = rem[0];
    for (std::size_t i = 1; i < n; ++i) m = std::min(m, rem[i]);
    for (std::size_t i = 0; i < n; ++i) tuple[i] = order[i][at[i]];
    out[idx.flat(tuple)] += weight * m;
    bool done = false;
    for (std::size_t i = 0; i < n; ++i) {
      rem[i] -= m;
      if (rem[i] <= 1e-15) {
        if (++at[i] == laws[i].size()) {
          done = true;
        } else {
          rem[i] = laws[i][order[i][at[i]]];
        }
      }
    }
    if (done) break;
  }
}

}  // namespace

std::vector<double> random_one_step_coupling(Rng& rng, const std::vector<std::vector<double>>& laws) {
  std::vector<std::size_t> radices;
  for (const auto& l : laws) radices.push_back(l.size());
  const ProductIndexer idx(radices);
  std::vector<double> out(idx.size(), 0.0);

  const int pieces = uniform_int(rng, 1, 3);
  const bool with_product = uniform_int(rng, 0, 2) == 0;
  std::vector<double> w(static_cast<std::size_t>(pieces + (with_product ? 1 : 0)));
  double total = 0.0;
  for (double& v : w) {
    v = uniform(rng, 0.1, 1.0);
    total += v;
  }
  for (double& v : w) v /= total;
  for (int k = 0; k < pieces; ++k) {
    std::vector<std::vector<std::size_t>> order(laws.size());
    for (std::size_t i = 0; i < laws.size(); ++i) {
      order[i].resize(laws[i].size());
      std::iota(order[i].begin(), order[i].end(), 0);
      std::shuffle(order[i].begin(), order[i].end(), rng);
    }
    north_west(laws, order, idx, w[static_cast<std::size_t>(k)], out);
  }
  if (with_product) {
    std::vector<std::size_t> tuple(laws.size());
    for (std::size_t f = 0; f < idx.size(); ++f) {
      idx.unflat(f, tuple);
      double m = w.back();
      for (std::size_t i = 0; i < laws.size(); ++i) m *= laws[i][tuple[i]];
      out[f] += m;
    }
  }
  return out;
}

Coupling random_adapted_coupling(Rng& rng, const std::vector<ProcessPtr>& ms) {
  const std::size_t n = ms.size();
  const int T = ms[0]->horizon();
  std::map<std::vector<std::size_t>, double> mass{{std::vector<std::size_t>(n, FilteredProcess::npos), 1.0}};
  for (int s = 0; s < T; ++s) {
    std::map<std::vector<std::size_t>, double> next;
    for (const auto& [prefix, m] : mass) {
      std::vector<std::vector<std::size_t>> kids(n);
      std::vector<std::vector<double>> laws(n);
      std::vector<std::size_t> radices;
      for (std::size_t i = 0; i < n; ++i) {
        auto [first, last] = s == 0 ? ms[i]->nodes_at(1) : ms[i]->children(prefix[i]);
        for (std::size_t c = first; c < last; ++c) {
          kids[i].push_back(c);
          laws[i].push_back(ms[i]->cond_prob(c));
        }
        radices.push_back(kids[i].size());
      }
      const std::vector<double> joint = random_one_step_coupling(rng, laws);
      const ProductIndexer idx(radices);
      std::vector<std::size_t> tuple(n), child(n);
      for (std::size_t f = 0; f < idx.size(); ++f) {
        if (joint[f] <= 0.0) continue;
        idx.unflat(f, tuple);
        for (std::size_t i = 0; i < n; ++i) child[i] = kids[i][tuple[i]];
        next[child] += m * joint[f];
      }
    }
    mass = std::move(next);
  }
  std::vector<CouplingEntry> entries;
  for (const auto& [nodes, m] : mass) {
    std::vector<std::size_t> leaves(n);
    for (std::size_t i = 0; i < n; ++i) leaves[i] = ms[i]->layer_index(nodes[i]);
    entries.push_back({leaves, m});
  }
  return Coupling(ms, std::move(entries));
}

Coupling random_plain_coupling(Rng& rng, const std::vector<ProcessPtr>& ms) {
  const std::size_t n = ms.size();
  std::vector<std::vector<double>> laws(n);
  std::vector<std::vector<std::size_t>> order(n);
  std::vector<std::size_t> radices;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < ms[i]->num_leaves(); ++l) laws[i].push_back(ms[i]->leaf_prob(l));
    order[i].resize(laws[i].size());
    std::iota(order[i].begin(), order[i].end(), 0);
    std::shuffle(order[i].begin(), order[i].end(), rng);
    radices.push_back(laws[i].size());
  }
  const ProductIndexer idx(radices);
  std::vector<double> joint(idx.size(), 0.0);
  north_west(laws, order, idx, 1.0, joint);
  std::vector<CouplingEntry> entries;
  std::vector<std::size_t> tuple(n);
  for (std::size_t f = 0; f < idx.size(); ++f) {
    if (joint[f] <= 0.0) continue;
    idx.unflat(f, tuple);
    entries.push_back({tuple, joint[f]});
  }
  return Coupling(ms, std::move(entries));
}

CostFunction random_table_cost(Rng& rng, const std::vector<ProcessPtr>& ms, double lo, double hi) {
  std::map<std::vector<std::string>, double> table;
  const ProductIndexer idx = leaf_indexer(ms);
  std::vector<std::size_t> tuple(ms.size());
  for (std::size_t f = 0; f < idx.size(); ++f) {
    idx.unflat(f, tuple);
    std::vector<std::string> key;
    for (std::size_t i = 0; i < ms.size(); ++i) key.push_back(ms[i]->leaf_id(tuple[i]));
    table[key] = uniform(rng, lo, hi);
  }
  return table_cost(std::move(table));
}

ProcessPtr path_tree(const std::vector<std::vector<double>>& paths, const std::vector<double>& masses,
                     const std::string& prefix) {
  if (paths.empty() || paths.size() != masses.size()) fail(ErrorCode::MalformedInput, "path_tree: bad input");
  const int T = static_cast<int>(paths[0].size());
  std::vector<NodeSpec> nodes;
  // node per distinct prefix, keyed by the prefix values
  std::map<std::vector<double>, std::pair<std::string, double>> made;
  std::vector<std::vector<double>> order;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    for (int t = 1; t <= T; ++t) {
      std::vector<double> key(paths[k].begin(), paths[k].begin() + t);
      auto [it, inserted] = made.emplace(key, std::make_pair(prefix + std::to_string(made.size()), 0.0));
      it->second.second += masses[k];
      if (inserted) order.push_back(key);
    }
  }
  for (const auto& key : order) {
    const auto& [id, mass] = made.at(key);
    NodeSpec s;
    s.id = id;
    s.t = static_cast<int>(key.size());
    s.value = {key.back()};
    if (s.t == 1) {
      s.prob = mass;
    } else {
      const auto& parent = made.at(std::vector<double>(key.begin(), key.end() - 1));
      s.parent = parent.first;
      s.prob = mass / parent.second;
    }
    nodes.push_back(std::move(s));
  }
  return FilteredProcess::build(1, T, std::move(nodes));
}

std::pair<ProcessPtr, ProcessPtr> gap_instance() {
  return {path_tree({{1, 1}, {-1, -1}}, {0.5, 0.5}, "x"), path_tree({{0, 1}, {0, -1}}, {0.5, 0.5}, "y")};
}

}  // namespace adot::instances
