#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adot/process.hpp"

namespace adot {

/// Cost c(x^1, ..., x^N) on tuples of leaf paths. Payoffs use the same type.
class CostFunction {
 public:
  using Fn = std::function<double(std::span<const PathRef>)>;

  CostFunction() = default;
  CostFunction(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  double operator()(std::span<const PathRef> paths) const { return fn_(paths); }
  const std::string& name() const noexcept { return name_; }
  explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

 private:
  std::string name_;
  Fn fn_;
};

// sum over t of ||x_t - y_t||_p^p, p in {1, 2}; two paths only
CostFunction lp_sum(int p);
// 1 if all terminal values agree within tol, else 0
CostFunction terminal_indicator(double tol = kInputTol);
CostFunction constant_cost(double value);
// Entries keyed by leaf-id tuples; a missing tuple throws MissingCostEntry.
CostFunction table_cost(std::map<std::vector<std::string>, double> entries);

CostFunction scaled(CostFunction c, double factor);
CostFunction shifted(CostFunction c, double offset);
CostFunction negated(CostFunction c);

/// Mixed-radix index over leaf tuples, first marginal most significant.
class ProductIndexer {
 public:
  explicit ProductIndexer(std::vector<std::size_t> radices);
  std::size_t size() const noexcept { return size_; }
  std::size_t arity() const noexcept { return radices_.size(); }
  std::size_t flat(std::span<const std::size_t> tuple) const;
  void unflat(std::size_t index, std::span<std::size_t> tuple) const;
  const std::vector<std::size_t>& radices() const noexcept { return radices_; }

 private:
  std::vector<std::size_t> radices_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

ProductIndexer leaf_indexer(std::span<const ProcessPtr> marginals);

double evaluate_cost(const CostFunction& c, std::span<const ProcessPtr> marginals,
                     std::span<const std::size_t> leaves);

/// Dense table of c over every leaf tuple, in leaf_indexer order.
std::vector<double> materialize(const CostFunction& c, std::span<const ProcessPtr> marginals);

}  // namespace adot
