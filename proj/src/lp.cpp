#include "adot/lp.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>

#include "adot/errors.hpp"
#include "adot/simd.hpp"

namespace adot {

std::size_t LinearProgram::add_row(double rhs) {
  a.resize(a.size() + cols, 0.0);
  b.push_back(rhs);
  return rows++;
}

namespace {

// Dense LU with partial pivoting, column-major-free: plain row-major storage.
class DenseLU {
 public:
  explicit DenseLU(std::size_t n) : n_(n), lu_(n * n, 0.0), perm_(n) {}
  double& at(std::size_t i, std::size_t j) { return lu_[i * n_ + j]; }

  bool factor() {
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t p = k;
      double best = std::fabs(at(k, k));
      for (std::size_t i = k + 1; i < n_; ++i) {
        const double v = std::fabs(at(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best < 1e-13) return false;
      if (p != k) {
        std::swap_ranges(lu_.begin() + static_cast<std::ptrdiff_t>(k * n_),
                         lu_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n_),
                         lu_.begin() + static_cast<std::ptrdiff_t>(p * n_));
        std::swap(perm_[k], perm_[p]);
      }
      const double piv = at(k, k);
      std::span<const double> row_k(&lu_[k * n_ + k + 1], n_ - k - 1);
      for (std::size_t i = k + 1; i < n_; ++i) {
        const double f = at(i, k) / piv;
        at(i, k) = f;
        if (f != 0.0) simd::axpy(-f, row_k, std::span<double>(&lu_[i * n_ + k + 1], n_ - k - 1));
      }
    }
    return true;
  }

  // solves B x = rhs in place
  void solve(std::vector<double>& v) const {
    std::vector<double> w(n_);
    for (std::size_t i = 0; i < n_; ++i) w[i] = v[perm_[i]];
    for (std::size_t i = 0; i < n_; ++i) {
      double s = w[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu_[i * n_ + j] * w[j];
      w[i] = s;
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = w[i];
      for (std::size_t j = i + 1; j < n_; ++j) s -= lu_[i * n_ + j] * w[j];
      w[i] = s / lu_[i * n_ + i];
    }
    v = std::move(w);
  }

  // solves B^T x = rhs in place
  void solve_transpose(std::vector<double>& v) const {
    std::vector<double> w(v);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = w[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu_[j * n_ + i] * w[j];
      w[i] = s / lu_[i * n_ + i];
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = w[i];
      for (std::size_t j = i + 1; j < n_; ++j) s -= lu_[j * n_ + i] * w[j];
      w[i] = s;
    }
    for (std::size_t i = 0; i < n_; ++i) v[perm_[i]] = w[i];
  }

 private:
  std::size_t n_;
  std::vector<double> lu_;
  std::vector<std::size_t> perm_;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opts) : lp_(lp), opts_(opts) {
    m_ = lp.rows;
    n_ = lp.cols;
    max_iter_ = opts.max_iterations ? opts.max_iterations : 50 * (m_ + n_) + 1000;
    sign_.assign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (lp.b[i] < 0.0) sign_[i] = -1.0;
    }
  }

  LPSolution run() {
    LPSolution sol;
    if (!phase_one()) {
      sol.status = LPStatus::infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    compact();
    for (int round = 0;; ++round) {
      if (!phase_two()) {
        sol.status = LPStatus::unbounded;
        sol.iterations = iterations_;
        return sol;
      }
      if (refine() || round >= 3) break;
    }
    if (!refined_ok_) {
      fail(ErrorCode::NumericalFailure, "simplex basis failed to refine to tolerance");
    }
    finish(sol);
    return sol;
  }

 private:
  double& T(std::size_t i, std::size_t j) { return tab_[i * width_ + j]; }
  std::span<double> row(std::size_t i) { return {&tab_[i * width_], width_}; }

  void pivot(std::size_t r, std::size_t s) {
    std::span<double> pr = row(r);
    const double inv = 1.0 / pr[s];
    simd::scale(inv, pr);
    pr[s] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || removed_[i]) continue;
      const double f = T(i, s);
      if (f == 0.0) continue;
      simd::axpy(-f, pr, row(i));
      T(i, s) = 0.0;
    }
    const double f = z_[s];
    if (f != 0.0) {
      simd::axpy(-f, pr, z_);
      z_[s] = 0.0;
    }
    basis_[r] = s;
  }

  // Runs simplex iterations on the current tableau with entering columns
  // restricted to [0, n_). Returns false on unboundedness.
  bool iterate() {
    const std::size_t rhs = width_ - 1;
    std::size_t degenerate = 0;
    bool bland = false;
    for (;;) {
      std::size_t s = width_;
      double best = -opts_.optimality_tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (z_[j] < best) {
          s = j;
          if (bland) break;
          best = z_[j];
        }
      }
      if (s == width_) return true;

      double theta = INFINITY;
      for (std::size_t i = 0; i < m_; ++i) {
        if (removed_[i]) continue;
        const double a = T(i, s);
        if (a > opts_.pivot_tol) theta = std::min(theta, std::max(T(i, rhs), 0.0) / a);
      }
      if (theta == INFINITY) return false;
      const double tie = 1e-12 * (1.0 + theta);
      std::size_t r = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        if (removed_[i]) continue;
        const double a = T(i, s);
        if (a <= opts_.pivot_tol) continue;
        if (std::max(T(i, rhs), 0.0) / a > theta + tie) continue;
        if (r == m_) {
          r = i;
        } else if (bland ? basis_[i] < basis_[r] : a > T(r, s)) {
          r = i;
        }
      }

      if (theta <= 1e-12) {
        if (++degenerate > 5 * (m_ + n_)) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      pivot(r, s);
      if (++iterations_ > max_iter_) {
        fail(ErrorCode::NumericalFailure, "simplex iteration limit exceeded");
      }
    }
  }

  bool phase_one() {
    width_ = n_ + m_ + 1;
    tab_.assign(m_ * width_, 0.0);
    removed_.assign(m_, false);
    basis_.resize(m_);
    z_.assign(width_, 0.0);
    const std::size_t rhs = width_ - 1;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) T(i, j) = sign_[i] * lp_.a[i * n_ + j];
      T(i, n_ + i) = 1.0;
      T(i, rhs) = sign_[i] * lp_.b[i];
      basis_[i] = n_ + i;
      for (std::size_t j = 0; j < n_; ++j) z_[j] -= T(i, j);
      z_[rhs] -= T(i, rhs);
    }
    if (!iterate()) fail(ErrorCode::NumericalFailure, "phase one reported unbounded");
    if (-z_[rhs] > opts_.feasibility_tol) return false;

    // drive artificial variables out of the basis
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      std::size_t s = n_;
      double best = 1e-8;
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = std::fabs(T(r, j));
        if (v > best) {
          best = v;
          s = j;
        }
      }
      if (s == n_) {
        removed_[r] = true;
        ++redundant_;
      } else {
        pivot(r, s);
      }
    }
    return true;
  }

  // Drops the artificial columns and installs the phase-two cost row.
  void compact() {
    const std::size_t old_width = width_;
    width_ = n_ + 1;
    std::vector<double> t(m_ * width_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (removed_[i]) continue;
      for (std::size_t j = 0; j < n_; ++j) t[i * width_ + j] = tab_[i * old_width + j];
      t[i * width_ + n_] = tab_[i * old_width + old_width - 1];
    }
    tab_ = std::move(t);
    z_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) z_[j] = lp_.c[j];
    for (std::size_t i = 0; i < m_; ++i) {
      if (removed_[i]) continue;
      const double cb = lp_.c[basis_[i]];
      if (cb != 0.0) simd::axpy(-cb, row(i), z_);
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (!removed_[i]) z_[basis_[i]] = 0.0;
    }
  }

  bool phase_two() { return iterate(); }

  // Recomputes x_B and y from the original data. Returns true when the basis
  // is primal and dual feasible to tolerance; otherwise rebuilds the tableau
  // from the basis so the simplex can continue.
  bool refine() {
    active_.clear();
    for (std::size_t i = 0; i < m_; ++i) {
      if (!removed_[i]) active_.push_back(i);
    }
    const std::size_t k = active_.size();
    DenseLU lu(k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t q = 0; q < k; ++q) {
        lu.at(r, q) = sign_[active_[r]] * lp_.a[active_[r] * n_ + basis_[active_[q]]];
      }
    }
    if (!lu.factor()) fail(ErrorCode::NumericalFailure, "singular basis during refinement");

    xb_.assign(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) xb_[r] = sign_[active_[r]] * lp_.b[active_[r]];
    lu.solve(xb_);
    yk_.assign(k, 0.0);
    for (std::size_t q = 0; q < k; ++q) yk_[q] = lp_.c[basis_[active_[q]]];
    lu.solve_transpose(yk_);

    d_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) d_[j] = lp_.c[j];
    for (std::size_t r = 0; r < k; ++r) {
      const double yr = sign_[active_[r]] * yk_[r];
      if (yr == 0.0) continue;
      simd::axpy(-yr, std::span<const double>(&lp_.a[active_[r] * n_], n_), d_);
    }
    for (std::size_t r = 0; r < k; ++r) d_[basis_[active_[r]]] = 0.0;

    double min_x = 0.0, min_d = 0.0;
    for (double v : xb_) min_x = std::min(min_x, v);
    for (double v : d_) min_d = std::min(min_d, v);
    refined_ok_ = min_x >= -opts_.feasibility_tol && min_d >= -opts_.feasibility_tol;
    if (refined_ok_) return true;

    // rebuild: row r of the tableau is e_r^T B^{-1} [A | b]
    std::vector<double> col(k);
    for (std::size_t j = 0; j < n_; ++j) {
      for (std::size_t r = 0; r < k; ++r) col[r] = sign_[active_[r]] * lp_.a[active_[r] * n_ + j];
      lu.solve(col);
      for (std::size_t r = 0; r < k; ++r) T(active_[r], j) = col[r];
    }
    for (std::size_t r = 0; r < k; ++r) {
      T(active_[r], n_) = std::max(xb_[r], 0.0);
      T(active_[r], basis_[active_[r]]) = 1.0;
    }
    for (std::size_t j = 0; j < n_; ++j) z_[j] = d_[j];
    double obj = 0.0;
    for (std::size_t r = 0; r < k; ++r) obj += lp_.c[basis_[active_[r]]] * std::max(xb_[r], 0.0);
    z_[n_] = -obj;
    return false;
  }

  void finish(LPSolution& sol) {
    sol.status = LPStatus::optimal;
    sol.iterations = iterations_;
    sol.redundant_rows = redundant_;
    sol.x.assign(n_, 0.0);
    for (std::size_t r = 0; r < active_.size(); ++r) {
      sol.x[basis_[active_[r]]] = std::max(xb_[r], 0.0);
      sol.basis.push_back(basis_[active_[r]]);
    }
    sol.y.assign(m_, 0.0);
    for (std::size_t r = 0; r < active_.size(); ++r) sol.y[active_[r]] = sign_[active_[r]] * yk_[r];

    double obj = 0.0, dobj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) obj += lp_.c[j] * sol.x[j];
    for (std::size_t i = 0; i < m_; ++i) dobj += lp_.b[i] * sol.y[i];
    sol.objective = obj;
    sol.dual_objective = dobj;

    LPResiduals& res = sol.residuals;
    double bmax = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += lp_.a[i * n_ + j] * sol.x[j];
      res.primal = std::max(res.primal, std::fabs(s - lp_.b[i]));
      bmax = std::max(bmax, std::fabs(lp_.b[i]));
    }
    for (std::size_t j = 0; j < n_; ++j) {
      double red = lp_.c[j];
      for (std::size_t i = 0; i < m_; ++i) red -= lp_.a[i * n_ + j] * sol.y[i];
      res.dual = std::max(res.dual, -red);
      res.complementarity = std::max(res.complementarity, std::fabs(sol.x[j] * red));
    }
    res.gap = std::fabs(obj - dobj);
    if (res.primal > 1e-9 * (1.0 + bmax) || res.gap > 1e-8 * (1.0 + std::fabs(obj))) {
      std::ostringstream os;
      os << "simplex solution inaccurate: primal residual " << res.primal << ", duality gap "
         << res.gap;
      fail(ErrorCode::NumericalFailure, os.str());
    }
  }

  const LinearProgram& lp_;
  const SimplexOptions& opts_;
  std::size_t m_ = 0, n_ = 0, width_ = 0;
  std::size_t max_iter_ = 0;
  std::size_t iterations_ = 0;
  std::size_t redundant_ = 0;
  bool refined_ok_ = false;
  std::vector<double> sign_;
  std::vector<double> tab_;
  std::vector<double> z_;
  std::vector<std::size_t> basis_;
  std::vector<bool> removed_;
  std::vector<std::size_t> active_;
  std::vector<double> xb_, yk_, d_;
};

}  // namespace

LPSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
  if (lp.a.size() != lp.rows * lp.cols || lp.b.size() != lp.rows || lp.c.size() != lp.cols) {
    fail(ErrorCode::MalformedInput, "linear program dimensions inconsistent");
  }
  for (double v : lp.b) {
    if (!std::isfinite(v)) fail(ErrorCode::MalformedInput, "linear program rhs not finite");
  }
  for (double v : lp.c) {
    if (!std::isfinite(v)) fail(ErrorCode::MalformedInput, "linear program cost not finite");
  }
  return Simplex(lp, opts).run();
}

TransportResult solve_transport(std::span<const double> p, std::span<const double> q,
                                std::span<const double> cost, const SimplexOptions& opts) {
  const std::size_t na = p.size(), nb = q.size();
  if (na == 0 || nb == 0) fail(ErrorCode::MalformedInput, "transport marginal is empty");
  if (cost.size() != na * nb) fail(ErrorCode::MalformedInput, "transport cost has wrong size");
  double sp = 0.0, sq = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) fail(ErrorCode::MalformedInput, "transport marginal has negative mass");
    sp += v;
  }
  for (double v : q) {
    if (!(v >= 0.0)) fail(ErrorCode::MalformedInput, "transport marginal has negative mass");
    sq += v;
  }
  if (std::fabs(sp - 1.0) > 1e-9 || std::fabs(sq - 1.0) > 1e-9) {
    fail(ErrorCode::MalformedInput, "transport marginals must sum to 1");
  }

  // rows: one per atom of p, one per atom of q except the last
  LinearProgram lp(na + nb - 1, na * nb);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t v = a * nb + b;
      lp.c[v] = cost[v];
      lp.at(a, v) = 1.0;
      if (b + 1 < nb) lp.at(na + b, v) = 1.0;
    }
    lp.b[a] = p[a];
  }
  for (std::size_t b = 0; b + 1 < nb; ++b) lp.b[na + b] = q[b];

  LPSolution sol = solve_lp(lp, opts);
  if (sol.status != LPStatus::optimal) {
    fail(ErrorCode::NumericalFailure, "transport problem not solved to optimality");
  }
  TransportResult out;
  out.plan = std::move(sol.x);
  out.phi.assign(sol.y.begin(), sol.y.begin() + static_cast<std::ptrdiff_t>(na));
  out.psi.assign(nb, 0.0);
  for (std::size_t b = 0; b + 1 < nb; ++b) out.psi[b] = sol.y[na + b];
  out.value = sol.objective;
  out.iterations = sol.iterations;
  out.gap = sol.residuals.gap;
  return out;
}

}  // namespace adot
