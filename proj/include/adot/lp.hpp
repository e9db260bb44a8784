#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adot {

/// min c^T x  subject to  A x = b,  x >= 0.  A is dense, row-major.
struct LinearProgram {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;

  LinearProgram() = default;
  LinearProgram(std::size_t m, std::size_t n) : rows(m), cols(n), a(m * n, 0.0), b(m, 0.0), c(n, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  // appends a zero row and returns its index
  std::size_t add_row(double rhs);
};

enum class LPStatus { optimal, infeasible, unbounded };

struct LPResiduals {
  double primal = 0.0;            // max |Ax - b|, and max(-x)
  double dual = 0.0;              // max(0, -(c - A^T y))
  double complementarity = 0.0;   // max |x_j (c - A^T y)_j|
  double gap = 0.0;               // |c^T x - b^T y|
};

struct LPSolution {
  LPStatus status = LPStatus::infeasible;
  std::vector<double> x;
  std::vector<double> y;  // one multiplier per constraint row
  double objective = 0.0;
  double dual_objective = 0.0;
  std::size_t iterations = 0;
  LPResiduals residuals;
  std::vector<std::size_t> basis;  // basic column per surviving row
  std::size_t redundant_rows = 0;
};

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-10;
  double feasibility_tol = 1e-9;
  // 0 selects 50 (m + n) + 1000
  std::size_t max_iterations = 0;
};

/// Two-phase dense primal simplex. Dantzig pricing with a switch to Bland's
/// rule after 5 (m + n) consecutive degenerate pivots. The final basis is
/// refactorized with partial-pivoting LU to recompute x and y.
/// Throws NumericalFailure on iteration overflow or a singular final basis.
LPSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

struct TransportResult {
  std::vector<double> plan;  // p.size() x q.size(), row-major
  std::vector<double> phi;
  std::vector<double> psi;   // psi.back() == 0
  double value = 0.0;
  std::size_t iterations = 0;
  double gap = 0.0;
};

/// Discrete optimal transport between p and q with cost C (row-major).
TransportResult solve_transport(std::span<const double> p, std::span<const double> q,
                                std::span<const double> cost, const SimplexOptions& opts = {});

}  // namespace adot
