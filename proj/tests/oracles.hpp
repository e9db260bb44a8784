#pragma once

// Brute-force reference solvers for the test suites. Nothing here touches the
// library's simplex: LPs are solved by enumerating basic feasible solutions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "adot/coupling.hpp"
#include "adot/cost.hpp"
#include "adot/process.hpp"

namespace oracle {

struct DenseLP {
  std::size_t m = 0, n = 0;
  std::vector<double> a;  // row-major m x n
  std::vector<double> b, c;
};

// Row-echelon reduction of [A | b]; drops dependent rows. Returns nullopt if
// the system is inconsistent.
inline std::optional<DenseLP> independent_rows(const DenseLP& lp, double tol = 1e-10) {
  std::vector<std::vector<double>> rows(lp.m);
  for (std::size_t i = 0; i < lp.m; ++i) {
    rows[i].assign(lp.a.begin() + i * lp.n, lp.a.begin() + (i + 1) * lp.n);
    rows[i].push_back(lp.b[i]);
  }
  std::vector<std::vector<double>> kept;
  std::vector<std::size_t> pivots;
  for (auto r : rows) {
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const double f = r[pivots[k]] / kept[k][pivots[k]];
      if (f != 0.0)
        for (std::size_t j = 0; j <= lp.n; ++j) r[j] -= f * kept[k][j];
    }
    std::size_t best = lp.n;
    double mag = tol;
    for (std::size_t j = 0; j < lp.n; ++j)
      if (std::abs(r[j]) > mag) mag = std::abs(r[j]), best = j;
    if (best == lp.n) {
      if (std::abs(r[lp.n]) > 1e-8) return std::nullopt;
      continue;
    }
    // eliminate the new pivot from earlier rows to keep the basis clean
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const double f = kept[k][best] / r[best];
      if (f != 0.0)
        for (std::size_t j = 0; j <= lp.n; ++j) kept[k][j] -= f * r[j];
    }
    kept.push_back(r);
    pivots.push_back(best);
  }
  DenseLP out;
  out.m = kept.size();
  out.n = lp.n;
  out.c = lp.c;
  for (const auto& r : kept) {
    out.a.insert(out.a.end(), r.begin(), r.begin() + static_cast<long>(lp.n));
    out.b.push_back(r[lp.n]);
  }
  return out;
}

// Solves the square system M x = rhs by Gaussian elimination with partial
// pivoting; nullopt if singular.
inline std::optional<std::vector<double>> solve_square(std::vector<double> m, std::vector<double> rhs) {
  const std::size_t r = rhs.size();
  for (std::size_t col = 0; col < r; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < r; ++i)
      if (std::abs(m[i * r + col]) > std::abs(m[piv * r + col])) piv = i;
    if (std::abs(m[piv * r + col]) < 1e-10) return std::nullopt;
    if (piv != col) {
      for (std::size_t j = 0; j < r; ++j) std::swap(m[col * r + j], m[piv * r + j]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t i = col + 1; i < r; ++i) {
      const double f = m[i * r + col] / m[col * r + col];
      for (std::size_t j = col; j < r; ++j) m[i * r + j] -= f * m[col * r + j];
      rhs[i] -= f * rhs[col];
    }
  }
  std::vector<double> x(r);
  for (std::size_t i = r; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < r; ++j) s -= m[i * r + j] * x[j];
    x[i] = s / m[i * r + i];
  }
  return x;
}

struct VertexResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> x;
  std::size_t vertices = 0;
};

// min c.x over {Ax = b, x >= 0} by enumerating every basis. Assumes the
// feasible set is bounded; returns nullopt when it is empty.
inline std::optional<VertexResult> vertex_min(const DenseLP& lp) {
  auto reduced = independent_rows(lp);
  if (!reduced) return std::nullopt;
  const DenseLP& r = *reduced;
  VertexResult best;
  if (r.m == 0) {
    best.value = 0.0;
    best.x.assign(r.n, 0.0);
    best.vertices = 1;
    return best;
  }
  std::vector<std::size_t> cols(r.m);
  for (std::size_t k = 0; k < r.m; ++k) cols[k] = k;
  for (;;) {
    std::vector<double> m(r.m * r.m);
    for (std::size_t i = 0; i < r.m; ++i)
      for (std::size_t k = 0; k < r.m; ++k) m[i * r.m + k] = r.a[i * r.n + cols[k]];
    if (auto xb = solve_square(std::move(m), r.b)) {
      if (std::all_of(xb->begin(), xb->end(), [](double v) { return v >= -1e-10; })) {
        ++best.vertices;
        double v = 0.0;
        for (std::size_t k = 0; k < r.m; ++k) v += r.c[cols[k]] * (*xb)[k];
        if (v < best.value) {
          best.value = v;
          best.x.assign(r.n, 0.0);
          for (std::size_t k = 0; k < r.m; ++k) best.x[cols[k]] = std::max(0.0, (*xb)[k]);
        }
      }
    }
    // next combination
    std::size_t k = r.m;
    while (k > 0 && cols[k - 1] == r.n - r.m + k - 1) --k;
    if (k == 0) break;
    ++cols[k - 1];
    for (std::size_t j = k; j < r.m; ++j) cols[j] = cols[j - 1] + 1;
  }
  if (best.vertices == 0) return std::nullopt;
  return best;
}

inline double transport_min(const std::vector<double>& p, const std::vector<double>& q,
                            const std::vector<double>& cost) {
  DenseLP lp;
  lp.n = p.size() * q.size();
  lp.m = p.size() + q.size();
  lp.a.assign(lp.m * lp.n, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) {
      lp.a[i * lp.n + i * q.size() + j] = 1.0;
      lp.a[(p.size() + j) * lp.n + i * q.size() + j] = 1.0;
    }
  lp.b = p;
  lp.b.insert(lp.b.end(), q.begin(), q.end());
  lp.c = cost;
  return vertex_min(lp)->value;
}

// 2 x 2 transport in closed form: the plan is a segment parametrized by its
// (0, 0) entry, so the optimum sits at one of the two endpoints.
inline double birkhoff_2x2(double p0, double q0, const double c[4]) {
  const double lo = std::max(0.0, p0 + q0 - 1.0), hi = std::min(p0, q0);
  auto value = [&](double s) {
    return s * c[0] + (p0 - s) * c[1] + (q0 - s) * c[2] + (1.0 - p0 - q0 + s) * c[3];
  };
  return std::min(value(lo), value(hi));
}

// Nested (bicausal) value by backward induction over node pairs with every
// one-step transport solved by vertex enumeration.
inline double bicausal_value(const adot::FilteredProcess& x, const adot::FilteredProcess& y,
                             const adot::CostFunction& c) {
  const int T = x.horizon();
  std::function<double(int, std::size_t, std::size_t)> value = [&](int t, std::size_t xp, std::size_t yp) {
    if (t == T) {
      const std::size_t xl = xp - x.nodes_at(T).first, yl = yp - y.nodes_at(T).first;
      adot::PathRef paths[2] = {x.leaf_path(xl), y.leaf_path(yl)};
      return c(paths);
    }
    auto [xb, xe] = x.children(xp);
    auto [yb, ye] = y.children(yp);
    std::vector<double> p, q, cost;
    for (std::size_t u = xb; u < xe; ++u) p.push_back(x.cond_prob(u));
    for (std::size_t v = yb; v < ye; ++v) q.push_back(y.cond_prob(v));
    for (std::size_t u = xb; u < xe; ++u)
      for (std::size_t v = yb; v < ye; ++v) cost.push_back(value(t + 1, u, v));
    return transport_min(p, q, cost);
  };
  auto [xb, xe] = x.nodes_at(1);
  auto [yb, ye] = y.nodes_at(1);
  std::vector<double> p, q, cost;
  for (std::size_t u = xb; u < xe; ++u) p.push_back(x.cond_prob(u));
  for (std::size_t v = yb; v < ye; ++v) q.push_back(y.cond_prob(v));
  for (std::size_t u = xb; u < xe; ++u)
    for (std::size_t v = yb; v < ye; ++v) cost.push_back(value(1, u, v));
  return transport_min(p, q, cost);
}

// Leaf-tuple LP with the causality constraints written as the product
// identities mu(x_{1:t}) pi(x, w_{1:t}) = mu(x) pi(x_{1:t}, w_{1:t}) for each
// owner marginal; `owners` lists the constrained marginals.
inline DenseLP product_identity_lp(const std::vector<adot::ProcessPtr>& ms, const adot::CostFunction& c,
                                   const std::vector<std::size_t>& owners) {
  const adot::ProductIndexer idx = adot::leaf_indexer(ms);
  const std::size_t n = idx.size(), N = ms.size();
  const int T = ms[0]->horizon();
  DenseLP lp;
  lp.n = n;
  lp.c = adot::materialize(c, ms);
  std::vector<std::vector<std::size_t>> tuples(n, std::vector<std::size_t>(N));
  for (std::size_t k = 0; k < n; ++k) idx.unflat(k, tuples[k]);
  auto add_row = [&](const std::vector<double>& row, double rhs) {
    lp.a.insert(lp.a.end(), row.begin(), row.end());
    lp.b.push_back(rhs);
    ++lp.m;
  };
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t leaf = 0; leaf < ms[i]->num_leaves(); ++leaf) {
      std::vector<double> row(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        if (tuples[k][i] == leaf) row[k] = 1.0;
      add_row(row, ms[i]->leaf_prob(leaf));
    }
  for (std::size_t i : owners) {
    const adot::FilteredProcess& own = *ms[i];
    for (int t = 1; t < T; ++t) {
      // every tuple of other nodes at depth t
      std::vector<std::vector<std::size_t>> others{{}};
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        std::vector<std::vector<std::size_t>> next;
        auto [b, e] = ms[j]->nodes_at(t);
        for (const auto& o : others)
          for (std::size_t pos = b; pos < e; ++pos) {
            next.push_back(o);
            next.back().push_back(pos);
          }
        others = std::move(next);
      }
      for (std::size_t leaf = 0; leaf < own.num_leaves(); ++leaf) {
        const std::size_t pre = own.ancestor(leaf, t);
        for (const auto& w : others) {
          std::vector<double> row(n, 0.0);
          for (std::size_t k = 0; k < n; ++k) {
            bool match = true;
            for (std::size_t j = 0, o = 0; j < N; ++j) {
              if (j == i) continue;
              if (ms[j]->ancestor(tuples[k][j], t) != w[o++]) match = false;
            }
            if (!match) continue;
            if (tuples[k][i] == leaf) row[k] += own.prob(pre);
            if (own.ancestor(tuples[k][i], t) == pre) row[k] -= own.leaf_prob(leaf);
          }
          add_row(row, 0.0);
        }
      }
    }
  }
  return lp;
}

inline std::vector<std::size_t> owners_of(adot::Mode mode, std::size_t n) {
  switch (mode) {
    case adot::Mode::plain: return {};
    case adot::Mode::causal: return {0};
    case adot::Mode::anticausal: return {1};
    default: {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      return all;
    }
  }
}

inline double adapted_value(const std::vector<adot::ProcessPtr>& ms, const adot::CostFunction& c, adot::Mode mode) {
  return vertex_min(product_identity_lp(ms, c, owners_of(mode, ms.size())))->value;
}

}  // namespace oracle
