#include "adot/polar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include "adot/errors.hpp"

namespace adot {

CostFunction event_cost(const Event& e, const std::vector<ProcessPtr>& marginals) {
  auto ids = std::make_shared<std::set<std::vector<std::string>>>();
  for (const auto& tuple : e) {
    if (tuple.size() != marginals.size()) fail(ErrorCode::MalformedInput, "event tuple has wrong arity");
    std::vector<std::string> key;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (tuple[i] >= marginals[i]->num_leaves()) fail(ErrorCode::MalformedInput, "event references unknown leaf");
      key.push_back(marginals[i]->leaf_id(tuple[i]));
    }
    ids->insert(std::move(key));
  }
  return CostFunction("-indicator", [ids](std::span<const PathRef> paths) {
    std::vector<std::string> key;
    for (const PathRef& p : paths) key.emplace_back(p.id);
    return ids->count(key) ? -1.0 : 0.0;
  });
}

double polar_max(const Event& e, const std::vector<ProcessPtr>& marginals, Mode mode) {
  const AdaptedResult r = solve_adapted_lp(marginals, event_cost(e, marginals), mode);
  return -r.value;
}

namespace {

using SliceKey = std::tuple<std::size_t, int, std::vector<std::size_t>, bool>;

std::map<SliceKey, std::size_t> slice_index(const PolarCertificate& cert) {
  std::map<SliceKey, std::size_t> idx;
  for (std::size_t k = 0; k < cert.slices.size(); ++k) {
    const PolarSlice& s = cert.slices[k];
    idx.emplace(SliceKey{s.marginal, s.t, s.key, s.terminal}, k);
  }
  return idx;
}

bool member(const PolarSlice& s, std::size_t x) {
  return std::find(s.members.begin(), s.members.end(), x) != s.members.end();
}

bool in_gluing_indexed(const PolarCertificate& cert, const std::map<SliceKey, std::size_t>& idx,
                       const std::vector<ProcessPtr>& ms, const std::vector<std::size_t>& leaves) {
  for (const auto& [key, k] : idx) {
    const PolarSlice& s = cert.slices[k];
    const FilteredProcess& m = *ms[s.marginal];
    if (s.terminal) {
      if (!member(s, leaves[s.marginal])) return false;
      continue;
    }
    if (s.t == 1) {
      if (!member(s, m.ancestor(leaves[s.marginal], 1))) return false;
      continue;
    }
    // only the slice matching this tuple's prefix applies
    std::vector<std::size_t> want{m.ancestor(leaves[s.marginal], s.t - 1)};
    for (std::size_t j = 0; j < ms.size(); ++j) {
      if (j != s.marginal) want.push_back(ms[j]->ancestor(leaves[j], s.t - 1));
    }
    if (want != s.key) continue;
    if (!member(s, m.ancestor(leaves[s.marginal], s.t))) return false;
  }
  return true;
}

}  // namespace

bool in_gluing(const PolarCertificate& cert, const std::vector<ProcessPtr>& marginals,
               const std::vector<std::size_t>& leaves) {
  return in_gluing_indexed(cert, slice_index(cert), marginals, leaves);
}

PolarCertificate try_build_certificate(const Event& e, const std::vector<ProcessPtr>& ms, Mode mode) {
  const AdaptedResult r = solve_adapted_lp(ms, event_cost(e, ms), mode);
  DualPotential d = raw_dual(r);
  const std::size_t n = ms.size();

  // gauge: every non-compensator part integrates to 0 except the last, which
  // absorbs the total
  std::vector<std::vector<double>*> parts;
  std::vector<double> integral;
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    double s = 0.0;
    if (!d.initial[i].empty()) {
      auto [first, last] = m.nodes_at(1);
      for (std::size_t pos = first; pos < last; ++pos) s += m.prob(pos) * d.initial[i][pos - first];
      parts.push_back(&d.initial[i]);
    } else if (!d.terminal[i].empty()) {
      for (std::size_t l = 0; l < m.num_leaves(); ++l) s += m.leaf_prob(l) * d.terminal[i][l];
      parts.push_back(&d.terminal[i]);
    } else {
      continue;
    }
    integral.push_back(s);
  }
  double moved = 0.0;
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    for (double& v : *parts[k]) v -= integral[k];
    moved += integral[k];
  }
  if (!parts.empty()) {
    for (double& v : *parts.back()) v += moved;
  }
  recenter_compensators(d);

  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : d.initial[i]) sup = std::max(sup, std::fabs(v));
    for (double v : d.terminal[i]) sup = std::max(sup, std::fabs(v));
    for (const auto& table : d.compensators[i]) {
      for (const auto& [k, v] : table) sup = std::max(sup, std::fabs(v));
    }
  }

  PolarCertificate cert;
  cert.mode = mode;
  cert.threshold = 1e-9 * std::max(sup, 1.0);
  const double thr = cert.threshold;
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& m = *ms[i];
    if (!d.initial[i].empty()) {
      PolarSlice s;
      s.marginal = i;
      s.t = 1;
      s.key = {FilteredProcess::npos};
      auto [first, last] = m.nodes_at(1);
      for (std::size_t pos = first; pos < last; ++pos) {
        if (std::fabs(d.initial[i][pos - first]) <= thr) s.members.push_back(pos);
      }
      s.full = s.members.size() == last - first;
      cert.slices.push_back(std::move(s));
      for (std::size_t k = 0; k < d.compensators[i].size(); ++k) {
        std::map<std::vector<std::size_t>, PolarSlice> groups;
        for (const auto& [key, v] : d.compensators[i][k]) {
          std::vector<std::size_t> g = key;
          g[0] = m.parent(key[0]);
          PolarSlice& slice = groups[g];
          slice.marginal = i;
          slice.t = static_cast<int>(k) + 2;
          slice.key = g;
          if (std::fabs(v) <= thr) slice.members.push_back(key[0]);
        }
        for (auto& [g, slice] : groups) {
          slice.full = slice.members.size() == m.num_children(g[0]);
          cert.slices.push_back(std::move(slice));
        }
      }
    }
    if (!d.terminal[i].empty()) {
      PolarSlice s;
      s.marginal = i;
      s.t = m.horizon();
      s.terminal = true;
      for (std::size_t l = 0; l < m.num_leaves(); ++l) {
        if (std::fabs(d.terminal[i][l]) <= thr) s.members.push_back(l);
      }
      s.full = s.members.size() == m.num_leaves();
      cert.slices.push_back(std::move(s));
    }
  }

  cert.ok = true;
  for (const PolarSlice& s : cert.slices) {
    if (!s.full) {
      cert.ok = false;
      std::ostringstream os;
      os << "slice of marginal " << s.marginal << " at t=" << s.t << " is not full ("
         << s.members.size() << " members)";
      cert.witness = os.str();
      break;
    }
  }
  if (cert.ok) {
    const auto idx = slice_index(cert);
    for (const auto& tuple : e) {
      if (in_gluing_indexed(cert, idx, ms, tuple)) {
        cert.ok = false;
        std::string ids;
        for (std::size_t i = 0; i < tuple.size(); ++i) ids += (i ? "," : "") + ms[i]->leaf_id(tuple[i]);
        cert.witness = "event tuple (" + ids + ") lies in the gluing";
        break;
      }
    }
  }
  return cert;
}

PolarCertificate polar_certificate(const Event& e, const std::vector<ProcessPtr>& marginals, Mode mode) {
  const double pm = polar_max(e, marginals, mode);
  if (pm > 1e-9) {
    std::ostringstream os;
    os << "event is not polar: some coupling charges it with mass " << pm;
    fail(ErrorCode::PreconditionViolation, os.str());
  }
  PolarCertificate cert = try_build_certificate(e, marginals, mode);
  if (!cert.ok) fail(ErrorCode::CertificateFailed, cert.witness);
  return cert;
}

}  // namespace adot
