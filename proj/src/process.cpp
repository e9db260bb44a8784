#include "adot/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "adot/errors.hpp"

namespace adot {

namespace {

std::int64_t quantize(double v) { return static_cast<std::int64_t>(std::llround(v / kInputTol)); }

}  // namespace

ProcessPtr FilteredProcess::build(int dimension, int horizon, std::vector<NodeSpec> specs) {
  if (dimension < 1) fail(ErrorCode::MalformedInput, "dimension must be positive");
  if (horizon < 1) fail(ErrorCode::MalformedInput, "horizon must be positive");
  if (specs.empty()) fail(ErrorCode::InvalidTree, "process has no nodes");

  std::unordered_map<std::string, std::size_t> input_index;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const NodeSpec& s = specs[k];
    if (s.id.empty()) fail(ErrorCode::MalformedInput, "node with empty id");
    if (!input_index.emplace(s.id, k).second) {
      fail(ErrorCode::InvalidTree, "duplicate node id '" + s.id + "'");
    }
    if (s.t < 1 || s.t > horizon) {
      fail(ErrorCode::InvalidTree, "node '" + s.id + "' has depth outside 1..T");
    }
    if (static_cast<int>(s.value.size()) != dimension) {
      fail(ErrorCode::MalformedInput, "node '" + s.id + "' value has wrong dimension");
    }
    for (double v : s.value) {
      if (!std::isfinite(v)) fail(ErrorCode::MalformedInput, "node '" + s.id + "' value not finite");
    }
    if (!std::isfinite(s.prob)) fail(ErrorCode::MalformedInput, "node '" + s.id + "' prob not finite");
    if (s.prob == 0.0) fail(ErrorCode::ZeroProbBranch, "node '" + s.id + "' has probability 0");
    if (s.prob < 0.0 || s.prob > 1.0 + kInputTol) {
      fail(ErrorCode::InvalidTree, "node '" + s.id + "' probability outside (0,1]");
    }
  }

  // children lists in input order
  std::vector<std::vector<std::size_t>> kids(specs.size());
  std::vector<std::size_t> roots;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const NodeSpec& s = specs[k];
    if (s.t == 1) {
      if (s.parent) fail(ErrorCode::InvalidTree, "time-1 node '" + s.id + "' has a parent");
      roots.push_back(k);
      continue;
    }
    if (!s.parent) fail(ErrorCode::InvalidTree, "node '" + s.id + "' has no parent");
    auto it = input_index.find(*s.parent);
    if (it == input_index.end()) {
      fail(ErrorCode::InvalidTree, "orphan node '" + s.id + "': unknown parent '" + *s.parent + "'");
    }
    if (specs[it->second].t != s.t - 1) {
      fail(ErrorCode::InvalidTree, "node '" + s.id + "' is not one level below its parent");
    }
    kids[it->second].push_back(k);
  }

  auto check_group = [&](const std::vector<std::size_t>& group, const std::string& where) {
    double sum = 0.0;
    for (std::size_t k : group) sum += specs[k].prob;
    if (std::fabs(sum - 1.0) > kInputTol) {
      std::ostringstream os;
      os.precision(17);
      os << "probabilities of " << where << " sum to " << sum;
      fail(ErrorCode::InvalidTree, os.str());
    }
    return sum;
  };

  auto proc = std::shared_ptr<FilteredProcess>(new FilteredProcess());
  FilteredProcess& P = *proc;
  P.dimension_ = dimension;
  P.horizon_ = horizon;
  P.nodes_.reserve(specs.size());
  P.layer_begin_.assign(static_cast<std::size_t>(horizon) + 1, 0);

  std::vector<std::size_t> order;  // input index per position
  order.reserve(specs.size());
  const double root_sum = check_group(roots, "time-1 nodes");
  for (std::size_t k : roots) {
    order.push_back(k);
    Node n;
    n.id = specs[k].id;
    n.t = 1;
    n.value = specs[k].value;
    n.cond_prob = specs[k].prob / root_sum;
    n.prob = n.cond_prob;
    P.nodes_.push_back(std::move(n));
  }
  P.layer_begin_[1] = P.nodes_.size();
  for (int t = 1; t < horizon; ++t) {
    const std::size_t first = P.layer_begin_[t - 1];
    const std::size_t last = P.layer_begin_[t];
    for (std::size_t pos = first; pos < last; ++pos) {
      const std::vector<std::size_t>& group = kids[order[pos]];
      if (group.empty()) {
        fail(ErrorCode::InvalidTree, "internal node '" + P.nodes_[pos].id + "' has no children");
      }
      const double sum = check_group(group, "children of '" + P.nodes_[pos].id + "'");
      P.nodes_[pos].child_begin = P.nodes_.size();
      for (std::size_t k : group) {
        order.push_back(k);
        Node n;
        n.id = specs[k].id;
        n.t = t + 1;
        n.value = specs[k].value;
        n.cond_prob = specs[k].prob / sum;
        n.prob = P.nodes_[pos].prob * n.cond_prob;
        n.parent = pos;
        P.nodes_.push_back(std::move(n));
      }
      P.nodes_[pos].child_end = P.nodes_.size();
    }
    P.layer_begin_[t + 1] = P.nodes_.size();
  }
  if (P.nodes_.size() != specs.size()) {
    // a node below a depth-T node, or a cycle-free but disconnected piece
    fail(ErrorCode::InvalidTree, "nodes unreachable from time-1 layer");
  }
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].t == horizon && !kids[k].empty()) {
      fail(ErrorCode::InvalidTree, "leaf '" + specs[k].id + "' has children");
    }
  }

  const std::size_t leaf_first = P.layer_begin_[horizon - 1];
  const std::size_t n_leaves = P.nodes_.size() - leaf_first;
  for (std::size_t pos = P.nodes_.size(); pos-- > 0;) {
    Node& n = P.nodes_[pos];
    if (n.t == horizon) {
      n.leaf_begin = pos - leaf_first;
      n.leaf_end = n.leaf_begin + 1;
    } else {
      n.leaf_begin = P.nodes_[n.child_begin].leaf_begin;
      n.leaf_end = P.nodes_[n.child_end - 1].leaf_end;
    }
  }

  P.leaf_ancestors_.assign(n_leaves * static_cast<std::size_t>(horizon), 0);
  P.leaf_paths_.resize(n_leaves);
  for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
    std::size_t pos = leaf_first + leaf;
    P.leaf_paths_[leaf].resize(static_cast<std::size_t>(horizon));
    for (int t = horizon; t >= 1; --t) {
      P.leaf_ancestors_[leaf * static_cast<std::size_t>(horizon) + (t - 1)] = pos;
      P.leaf_paths_[leaf][t - 1] = P.nodes_[pos].value;
      pos = P.nodes_[pos].parent;
    }
  }
  for (std::size_t pos = 0; pos < P.nodes_.size(); ++pos) P.index_.emplace(P.nodes_[pos].id, pos);
  return proc;
}

std::pair<std::size_t, std::size_t> FilteredProcess::nodes_at(int t) const {
  if (t < 1 || t > horizon_) fail(ErrorCode::OutOfRange, "time index outside 1..T");
  return {layer_begin_[t - 1], layer_begin_[t]};
}

std::size_t FilteredProcess::count_at(int t) const {
  auto [a, b] = nodes_at(t);
  return b - a;
}

std::optional<std::size_t> FilteredProcess::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> FilteredProcess::find_leaf(std::string_view id) const {
  auto pos = find(id);
  if (!pos || nodes_[*pos].t != horizon_) return std::nullopt;
  return *pos - layer_begin_[horizon_ - 1];
}

std::vector<NodeSpec> FilteredProcess::to_specs() const {
  std::vector<NodeSpec> out;
  out.reserve(nodes_.size());
  for (const Node& n : nodes_) {
    NodeSpec s;
    s.id = n.id;
    s.t = n.t;
    s.value = n.value;
    s.prob = n.cond_prob;
    if (n.parent != npos) s.parent = nodes_[n.parent].id;
    out.push_back(std::move(s));
  }
  return out;
}

TransitionKernel disintegrate(const FilteredProcess& p, int t) {
  if (t < 2 || t > p.horizon()) fail(ErrorCode::OutOfRange, "kernel time outside 2..T");
  TransitionKernel k;
  k.t = t;
  auto [first, last] = p.nodes_at(t - 1);
  for (std::size_t pos = first; pos < last; ++pos) {
    TransitionKernel::Row row;
    row.parent = p.id(pos);
    auto [cb, ce] = p.children(pos);
    for (std::size_t c = cb; c < ce; ++c) row.children.emplace_back(p.id(c), p.cond_prob(c));
    k.rows.push_back(std::move(row));
  }
  return k;
}

namespace {

// Interned signature of a node: quantized value plus the sorted multiset of
// (child signature, summed quantized probability).
struct SignatureTable {
  using Key = std::pair<std::vector<std::int64_t>, std::vector<std::pair<std::size_t, std::int64_t>>>;
  std::map<Key, std::size_t> ids;
  std::size_t intern(Key key) {
    auto [it, inserted] = ids.emplace(std::move(key), ids.size());
    return it->second;
  }
};

std::vector<std::size_t> node_signatures(const FilteredProcess& p, SignatureTable& table) {
  std::vector<std::size_t> sig(p.num_nodes());
  for (std::size_t pos = p.num_nodes(); pos-- > 0;) {
    SignatureTable::Key key;
    for (double v : p.value(pos)) key.first.push_back(quantize(v));
    std::map<std::size_t, double> mass;
    auto [cb, ce] = p.children(pos);
    for (std::size_t c = cb; c < ce; ++c) mass[sig[c]] += p.cond_prob(c);
    for (const auto& [s, m] : mass) key.second.emplace_back(s, quantize(m));
    sig[pos] = table.intern(std::move(key));
  }
  return sig;
}

}  // namespace

ProcessPtr canonicalize(const FilteredProcess& p) {
  SignatureTable table;
  const std::vector<std::size_t> sig = node_signatures(p, table);

  std::vector<NodeSpec> out;
  // Emits one merged node standing for a group of equivalent siblings. All
  // members share the same conditional future, so the representative's
  // children describe it.
  std::function<void(std::size_t, double, const std::optional<std::string>&)> emit =
      [&](std::size_t rep, double prob, const std::optional<std::string>& parent) {
        NodeSpec s;
        s.id = p.id(rep);
        s.t = p.time(rep);
        s.value = p.value(rep);
        s.prob = prob;
        s.parent = parent;
        out.push_back(s);
        auto [cb, ce] = p.children(rep);
        std::vector<std::pair<std::size_t, double>> groups;  // (representative, mass)
        std::map<std::size_t, std::size_t> slot;
        for (std::size_t c = cb; c < ce; ++c) {
          auto [it, inserted] = slot.emplace(sig[c], groups.size());
          if (inserted) groups.emplace_back(c, 0.0);
          groups[it->second].second += p.cond_prob(c);
        }
        for (const auto& [c, m] : groups) emit(c, m, s.id);
      };

  auto [first, last] = p.nodes_at(1);
  std::vector<std::pair<std::size_t, double>> groups;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t pos = first; pos < last; ++pos) {
    auto [it, inserted] = slot.emplace(sig[pos], groups.size());
    if (inserted) groups.emplace_back(pos, 0.0);
    groups[it->second].second += p.cond_prob(pos);
  }
  for (const auto& [pos, m] : groups) emit(pos, m, std::nullopt);
  return FilteredProcess::build(p.dimension(), p.horizon(), std::move(out));
}

std::string structural_signature(const FilteredProcess& p) {
  // Recursive text form with children sorted, so sibling order and ids do not
  // matter.
  std::function<std::string(std::size_t)> rec = [&](std::size_t pos) {
    std::string s = "(";
    for (double v : p.value(pos)) s += std::to_string(quantize(v)) + ",";
    std::vector<std::string> parts;
    auto [cb, ce] = p.children(pos);
    for (std::size_t c = cb; c < ce; ++c) {
      parts.push_back(std::to_string(quantize(p.cond_prob(c))) + ":" + rec(c));
    }
    std::sort(parts.begin(), parts.end());
    for (const std::string& part : parts) s += part;
    return s + ")";
  };
  std::vector<std::string> parts;
  auto [first, last] = p.nodes_at(1);
  for (std::size_t pos = first; pos < last; ++pos) {
    parts.push_back(std::to_string(quantize(p.cond_prob(pos))) + ":" + rec(pos));
  }
  std::sort(parts.begin(), parts.end());
  std::string s = "T" + std::to_string(p.horizon()) + "d" + std::to_string(p.dimension()) + "[";
  for (const std::string& part : parts) s += part;
  return s + "]";
}

bool structurally_equal(const FilteredProcess& a, const FilteredProcess& b) {
  return structural_signature(a) == structural_signature(b);
}

MartingaleReport is_martingale(const FilteredProcess& p, double tol) {
  MartingaleReport r;
  const std::size_t d = static_cast<std::size_t>(p.dimension());
  for (std::size_t pos = 0; pos < p.num_nodes(); ++pos) {
    auto [cb, ce] = p.children(pos);
    if (cb == ce) continue;
    for (std::size_t k = 0; k < d; ++k) {
      double mean = 0.0;
      for (std::size_t c = cb; c < ce; ++c) mean += p.cond_prob(c) * p.value(c)[k];
      const double dev = std::fabs(mean - p.value(pos)[k]);
      if (dev > r.worst_violation) {
        r.worst_violation = dev;
        r.witness = "node '" + p.id(pos) + "' component " + std::to_string(k);
      }
    }
  }
  r.ok = r.worst_violation <= tol;
  return r;
}

}  // namespace adot
