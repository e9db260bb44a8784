#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace adot {

inline constexpr double kInputTol = 1e-9;
inline constexpr double kDerivedTol = 1e-8;

struct NodeSpec {
  std::string id;
  int t = 1;
  std::vector<double> value;
  double prob = 1.0;
  std::optional<std::string> parent;
};

/// View of one leaf path: the leaf id and the node values for t = 1..T.
struct PathRef {
  std::string_view id;
  std::span<const std::vector<double>> values;
};

class FilteredProcess;
using ProcessPtr = std::shared_ptr<const FilteredProcess>;

/// Finitely supported adapted process stored as a scenario tree.
///
/// Nodes are addressed by position. Positions are ordered by depth, then by
/// parent position, then by input order, so every depth layer, every sibling
/// group and every set of leaves below a node is a contiguous range.
/// Conditional probabilities are renormalized per sibling group after
/// validation.
class FilteredProcess {
 public:
  static ProcessPtr build(int dimension, int horizon, std::vector<NodeSpec> nodes);

  int horizon() const noexcept { return horizon_; }
  int dimension() const noexcept { return dimension_; }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }

  // positions [first, last) of the nodes at depth t
  std::pair<std::size_t, std::size_t> nodes_at(int t) const;
  std::size_t count_at(int t) const;
  // index of a node inside its depth layer
  std::size_t layer_index(std::size_t pos) const { return pos - layer_begin_[nodes_[pos].t - 1]; }
  std::size_t position(int t, std::size_t layer_idx) const { return layer_begin_[t - 1] + layer_idx; }

  const std::string& id(std::size_t pos) const { return nodes_[pos].id; }
  int time(std::size_t pos) const { return nodes_[pos].t; }
  const std::vector<double>& value(std::size_t pos) const { return nodes_[pos].value; }
  double cond_prob(std::size_t pos) const { return nodes_[pos].cond_prob; }
  // unconditional probability of the prefix ending at pos
  double prob(std::size_t pos) const { return nodes_[pos].prob; }
  // parent position, or npos for t = 1
  std::size_t parent(std::size_t pos) const { return nodes_[pos].parent; }
  std::pair<std::size_t, std::size_t> children(std::size_t pos) const {
    return {nodes_[pos].child_begin, nodes_[pos].child_end};
  }
  std::size_t num_children(std::size_t pos) const {
    return nodes_[pos].child_end - nodes_[pos].child_begin;
  }
  // leaf indices [first, last) below pos
  std::pair<std::size_t, std::size_t> leaf_range(std::size_t pos) const {
    return {nodes_[pos].leaf_begin, nodes_[pos].leaf_end};
  }

  std::size_t num_leaves() const noexcept { return leaf_paths_.size(); }
  std::size_t leaf_node(std::size_t leaf) const { return layer_begin_[horizon_ - 1] + leaf; }
  double leaf_prob(std::size_t leaf) const { return prob(leaf_node(leaf)); }
  const std::string& leaf_id(std::size_t leaf) const { return id(leaf_node(leaf)); }
  // position of the depth-t ancestor of a leaf (the leaf's own node for t = T)
  std::size_t ancestor(std::size_t leaf, int t) const {
    return leaf_ancestors_[leaf * static_cast<std::size_t>(horizon_) + (t - 1)];
  }
  PathRef leaf_path(std::size_t leaf) const {
    return PathRef{leaf_id(leaf), leaf_paths_[leaf]};
  }

  std::optional<std::size_t> find(std::string_view id) const;
  std::optional<std::size_t> find_leaf(std::string_view id) const;

  // nodes in position order, suitable for rebuilding or serialization
  std::vector<NodeSpec> to_specs() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::string id;
    int t = 1;
    std::vector<double> value;
    double cond_prob = 1.0;
    double prob = 1.0;
    std::size_t parent = npos;
    std::size_t child_begin = 0, child_end = 0;
    std::size_t leaf_begin = 0, leaf_end = 0;
  };

  FilteredProcess() = default;

  int dimension_ = 1;
  int horizon_ = 1;
  std::vector<Node> nodes_;
  std::vector<std::size_t> layer_begin_;  // size T + 1
  std::vector<std::size_t> leaf_ancestors_;
  std::vector<std::vector<std::vector<double>>> leaf_paths_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TransitionKernel {
  struct Row {
    std::string parent;
    std::vector<std::pair<std::string, double>> children;
  };
  int t = 2;
  std::vector<Row> rows;
};

/// One-step kernel from depth t-1 to depth t. Throws OutOfRange unless 2 <= t <= T.
TransitionKernel disintegrate(const FilteredProcess& p, int t);

/// Merges sibling nodes whose value and canonicalized conditional future
/// coincide. Merged nodes keep the id of their first member.
ProcessPtr canonicalize(const FilteredProcess& p);

/// Order- and id-insensitive fingerprint of the tree (values and
/// probabilities quantized to 1e-9).
std::string structural_signature(const FilteredProcess& p);
bool structurally_equal(const FilteredProcess& a, const FilteredProcess& b);

struct MartingaleReport {
  bool ok = true;
  double worst_violation = 0.0;
  std::string witness;
};

MartingaleReport is_martingale(const FilteredProcess& p, double tol = kInputTol);

}  // namespace adot
