#include "adot/cost.hpp"

#include <cmath>
#include <memory>

#include "adot/errors.hpp"

namespace adot {

CostFunction lp_sum(int p) {
  if (p != 1 && p != 2) fail(ErrorCode::MalformedInput, "lp_sum supports p = 1 or 2");
  return CostFunction("lp_sum" + std::to_string(p), [p](std::span<const PathRef> paths) {
    if (paths.size() != 2) fail(ErrorCode::PreconditionViolation, "lp_sum takes two paths");
    const auto& x = paths[0].values;
    const auto& y = paths[1].values;
    if (x.size() != y.size()) fail(ErrorCode::HorizonMismatch, "lp_sum: paths differ in length");
    double s = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      if (x[t].size() != y[t].size()) fail(ErrorCode::MalformedInput, "lp_sum: dimension mismatch");
      for (std::size_t k = 0; k < x[t].size(); ++k) {
        const double diff = std::fabs(x[t][k] - y[t][k]);
        s += p == 1 ? diff : diff * diff;
      }
    }
    return s;
  });
}

CostFunction terminal_indicator(double tol) {
  return CostFunction("terminal_indicator", [tol](std::span<const PathRef> paths) {
    if (paths.empty()) return 1.0;
    const std::vector<double>& ref = paths[0].values.back();
    for (std::size_t i = 1; i < paths.size(); ++i) {
      const std::vector<double>& v = paths[i].values.back();
      if (v.size() != ref.size()) return 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (std::fabs(v[k] - ref[k]) > tol) return 0.0;
      }
    }
    return 1.0;
  });
}

CostFunction constant_cost(double value) {
  return CostFunction("constant", [value](std::span<const PathRef>) { return value; });
}

CostFunction table_cost(std::map<std::vector<std::string>, double> entries) {
  auto table = std::make_shared<const std::map<std::vector<std::string>, double>>(std::move(entries));
  return CostFunction("table", [table](std::span<const PathRef> paths) {
    std::vector<std::string> key;
    key.reserve(paths.size());
    for (const PathRef& p : paths) key.emplace_back(p.id);
    auto it = table->find(key);
    if (it == table->end()) {
      std::string msg = "no cost entry for (";
      for (std::size_t i = 0; i < key.size(); ++i) msg += (i ? "," : "") + key[i];
      fail(ErrorCode::MissingCostEntry, msg + ")");
    }
    return it->second;
  });
}

CostFunction scaled(CostFunction c, double factor) {
  std::string name = c.name() + "*k";
  return CostFunction(std::move(name), [c = std::move(c), factor](std::span<const PathRef> p) {
    return factor * c(p);
  });
}

CostFunction shifted(CostFunction c, double offset) {
  std::string name = c.name() + "+k";
  return CostFunction(std::move(name), [c = std::move(c), offset](std::span<const PathRef> p) {
    return c(p) + offset;
  });
}

CostFunction negated(CostFunction c) {
  std::string name = "-" + c.name();
  return CostFunction(std::move(name), [c = std::move(c)](std::span<const PathRef> p) { return -c(p); });
}

ProductIndexer::ProductIndexer(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
  strides_.assign(radices_.size(), 1);
  for (std::size_t i = radices_.size(); i-- > 0;) {
    strides_[i] = size_;
    size_ *= radices_[i];
  }
}

std::size_t ProductIndexer::flat(std::span<const std::size_t> tuple) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < radices_.size(); ++i) idx += tuple[i] * strides_[i];
  return idx;
}

void ProductIndexer::unflat(std::size_t index, std::span<std::size_t> tuple) const {
  for (std::size_t i = 0; i < radices_.size(); ++i) {
    tuple[i] = index / strides_[i];
    index %= strides_[i];
  }
}

ProductIndexer leaf_indexer(std::span<const ProcessPtr> marginals) {
  std::vector<std::size_t> r;
  for (const ProcessPtr& m : marginals) r.push_back(m->num_leaves());
  return ProductIndexer(std::move(r));
}

double evaluate_cost(const CostFunction& c, std::span<const ProcessPtr> marginals,
                     std::span<const std::size_t> leaves) {
  std::vector<PathRef> paths;
  paths.reserve(marginals.size());
  for (std::size_t i = 0; i < marginals.size(); ++i) paths.push_back(marginals[i]->leaf_path(leaves[i]));
  const double v = c(paths);
  if (!std::isfinite(v)) fail(ErrorCode::MalformedInput, "cost is not finite");
  return v;
}

std::vector<double> materialize(const CostFunction& c, std::span<const ProcessPtr> marginals) {
  const ProductIndexer idx = leaf_indexer(marginals);
  std::vector<double> out(idx.size());
  std::vector<std::size_t> tuple(marginals.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    idx.unflat(k, tuple);
    out[k] = evaluate_cost(c, marginals, tuple);
  }
  return out;
}

}  // namespace adot
