#include "adot/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adot/errors.hpp"

namespace adot {

std::string_view mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::plain: return "plain";
    case Mode::causal: return "causal";
    case Mode::anticausal: return "anticausal";
    case Mode::bicausal: return "bicausal";
    case Mode::multicausal: return "multicausal";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::plain, Mode::causal, Mode::anticausal, Mode::bicausal, Mode::multicausal}) {
    if (name == mode_name(m)) return m;
  }
  fail(ErrorCode::MalformedInput, "unknown mode '" + std::string(name) + "'");
}

Coupling::Coupling(std::vector<ProcessPtr> marginals, std::vector<CouplingEntry> entries)
    : marginals_(std::move(marginals)) {
  if (marginals_.empty()) fail(ErrorCode::MalformedInput, "coupling needs at least one marginal");
  for (const ProcessPtr& m : marginals_) {
    if (!m) fail(ErrorCode::MalformedInput, "null marginal");
  }
  for (CouplingEntry& e : entries) {
    if (e.leaves.size() != marginals_.size()) {
      fail(ErrorCode::MalformedInput, "coupling tuple has wrong arity");
    }
    for (std::size_t i = 0; i < e.leaves.size(); ++i) {
      if (e.leaves[i] >= marginals_[i]->num_leaves()) {
        fail(ErrorCode::MalformedInput, "coupling tuple references unknown leaf");
      }
    }
    if (!std::isfinite(e.mass)) fail(ErrorCode::MalformedInput, "coupling mass not finite");
    if (e.mass < -1e-12) fail(ErrorCode::MalformedInput, "negative coupling mass");
    if (e.mass < 0.0) e.mass = 0.0;
  }
  std::sort(entries.begin(), entries.end(),
            [](const CouplingEntry& a, const CouplingEntry& b) { return a.leaves < b.leaves; });
  for (CouplingEntry& e : entries) {
    if (!entries_.empty() && entries_.back().leaves == e.leaves) {
      entries_.back().mass += e.mass;
    } else {
      entries_.push_back(std::move(e));
    }
  }
  std::erase_if(entries_, [](const CouplingEntry& e) { return e.mass == 0.0; });
}

double Coupling::total_mass() const {
  double s = 0.0;
  for (const CouplingEntry& e : entries_) s += e.mass;
  return s;
}

double Coupling::mass_of(std::span<const std::size_t> leaves) const {
  std::vector<std::size_t> key(leaves.begin(), leaves.end());
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const CouplingEntry& e, const std::vector<std::size_t>& k) {
                               return e.leaves < k;
                             });
  if (it != entries_.end() && it->leaves == key) return it->mass;
  return 0.0;
}

Coupling product(std::span<const ProcessPtr> marginals) {
  const ProductIndexer idx = leaf_indexer(marginals);
  std::vector<CouplingEntry> entries;
  entries.reserve(idx.size());
  std::vector<std::size_t> tuple(marginals.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    idx.unflat(k, tuple);
    double m = 1.0;
    for (std::size_t i = 0; i < marginals.size(); ++i) m *= marginals[i]->leaf_prob(tuple[i]);
    entries.push_back({tuple, m});
  }
  return Coupling(std::vector<ProcessPtr>(marginals.begin(), marginals.end()), std::move(entries));
}

Coupling product(const ProcessPtr& p, const ProcessPtr& q) {
  const ProcessPtr ms[] = {p, q};
  return product(std::span<const ProcessPtr>(ms));
}

namespace {

void note(CouplingReport& r, double violation, const std::string& where) {
  if (violation > r.worst_violation) {
    r.worst_violation = violation;
    r.witness = where;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_marginals(const Coupling& pi, CouplingReport& r) {
  const double total = pi.total_mass();
  note(r, std::fabs(total - 1.0), "total mass " + fmt(total));
  for (std::size_t i = 0; i < pi.arity(); ++i) {
    const FilteredProcess& m = *pi.marginals()[i];
    std::vector<double> law(m.num_leaves(), 0.0);
    for (const CouplingEntry& e : pi.entries()) law[e.leaves[i]] += e.mass;
    for (std::size_t l = 0; l < law.size(); ++l) {
      note(r, std::fabs(law[l] - m.leaf_prob(l)),
           "marginal " + std::to_string(i) + " leaf '" + m.leaf_id(l) + "' has mass " + fmt(law[l]) +
               ", expected " + fmt(m.leaf_prob(l)));
    }
  }
}

// Product identities for marginal `own` at time t.
void check_owner(const Coupling& pi, std::size_t own, int t, CouplingReport& r) {
  const auto& ms = pi.marginals();
  const FilteredProcess& mine = *ms[own];
  std::map<std::vector<std::size_t>, double> by_leaf, by_prefix;
  std::vector<std::size_t> key;
  for (const CouplingEntry& e : pi.entries()) {
    key.clear();
    key.push_back(e.leaves[own]);
    for (std::size_t j = 0; j < ms.size(); ++j) {
      if (j != own) key.push_back(ms[j]->ancestor(e.leaves[j], t));
    }
    by_leaf[key] += e.mass;
    key[0] = mine.ancestor(e.leaves[own], t);
    by_prefix[key] += e.mass;
  }
  for (const auto& [pk, pmass] : by_prefix) {
    const std::size_t u = pk[0];
    auto [lb, le] = mine.leaf_range(u);
    key = pk;
    for (std::size_t x = lb; x < le; ++x) {
      key[0] = x;
      auto it = by_leaf.find(key);
      const double joint = it == by_leaf.end() ? 0.0 : it->second;
      const double lhs = mine.prob(u) * joint;
      const double rhs = mine.leaf_prob(x) * pmass;
      const double v = std::fabs(lhs - rhs);
      if (v > r.worst_violation) {
        std::string others;
        for (std::size_t j = 0, k = 1; j < ms.size(); ++j) {
          if (j == own) continue;
          others += (others.empty() ? "" : ",") + ms[j]->id(pk[k++]);
        }
        note(r, v,
             "marginal " + std::to_string(own) + " t=" + std::to_string(t) + " leaf '" +
                 mine.leaf_id(x) + "' vs prefix (" + others + "): " + fmt(lhs) + " != " + fmt(rhs));
      }
    }
  }
}

}  // namespace

CouplingReport check_coupling(const Coupling& pi, Mode mode, double tol) {
  CouplingReport r;
  r.mode = mode;
  const std::size_t n = pi.arity();
  std::vector<std::size_t> owners;
  switch (mode) {
    case Mode::plain: break;
    case Mode::causal:
    case Mode::anticausal:
    case Mode::bicausal:
      if (n != 2) fail(ErrorCode::PreconditionViolation, std::string(mode_name(mode)) + " needs two marginals");
      if (mode != Mode::anticausal) owners.push_back(0);
      if (mode != Mode::causal) owners.push_back(1);
      break;
    case Mode::multicausal:
      for (std::size_t i = 0; i < n; ++i) owners.push_back(i);
      break;
  }
  const int T = pi.marginals()[0]->horizon();
  if (!owners.empty()) {
    for (const ProcessPtr& m : pi.marginals()) {
      if (m->horizon() != T) fail(ErrorCode::HorizonMismatch, "marginals have different horizons");
    }
  }
  check_marginals(pi, r);
  if (n >= 2) {
    for (std::size_t own : owners) {
      for (int t = 1; t < T; ++t) check_owner(pi, own, t, r);
    }
  }
  r.ok = r.worst_violation <= tol;
  return r;
}

double expected_cost(const Coupling& pi, const CostFunction& c) {
  double s = 0.0;
  for (const CouplingEntry& e : pi.entries()) s += e.mass * evaluate_cost(c, pi.marginals(), e.leaves);
  return s;
}

std::map<std::vector<std::size_t>, double> prefix_masses(const Coupling& pi, int t) {
  std::map<std::vector<std::size_t>, double> out;
  std::vector<std::size_t> key(pi.arity());
  for (const CouplingEntry& e : pi.entries()) {
    for (std::size_t i = 0; i < pi.arity(); ++i) key[i] = pi.marginals()[i]->ancestor(e.leaves[i], t);
    out[key] += e.mass;
  }
  return out;
}

OneStepLaws disintegrate_coupling(const Coupling& pi, int t) {
  const int T = pi.marginals()[0]->horizon();
  for (const ProcessPtr& m : pi.marginals()) {
    if (m->horizon() != T) fail(ErrorCode::HorizonMismatch, "marginals have different horizons");
  }
  if (t < 1 || t > T) fail(ErrorCode::OutOfRange, "disintegration time outside 1..T");
  OneStepLaws out;
  const auto here = prefix_masses(pi, t);
  if (t == 1) {
    auto& law = out[{}];
    for (const auto& [k, m] : here) law[k] = m;
    return out;
  }
  const auto before = prefix_masses(pi, t - 1);
  std::vector<std::size_t> parent(pi.arity());
  for (const auto& [k, m] : here) {
    for (std::size_t i = 0; i < pi.arity(); ++i) parent[i] = pi.marginals()[i]->parent(k[i]);
    out[parent][k] = m / before.at(parent);
  }
  return out;
}

}  // namespace adot
