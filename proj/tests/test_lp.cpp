#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "adot/lp.hpp"
#include "oracles.hpp"

using namespace adot;

namespace {

oracle::DenseLP to_dense(const LinearProgram& lp) {
  return oracle::DenseLP{lp.rows, lp.cols, lp.a, lp.b, lp.c};
}

// Feasible and bounded: b = A x0 for x0 >= 0 plus a row fixing sum(x).
LinearProgram random_bounded_lp(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LinearProgram lp(m, n);
  std::vector<double> x0(n);
  for (auto& v : x0) v = u(rng) < 0.4 ? 0.0 : u(rng);
  for (std::size_t j = 0; j < n; ++j) lp.at(0, j) = 1.0;
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) lp.at(i, j) = std::round(8.0 * (u(rng) - 0.5)) / 4.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) lp.b[i] += lp.at(i, j) * x0[j];
  for (auto& c : lp.c) c = std::round(10.0 * (u(rng) - 0.3)) / 2.0;
  return lp;
}

void check_certificates(const LinearProgram& lp, const LPSolution& s) {
  REQUIRE(s.status == LPStatus::optimal);
  CHECK(s.residuals.primal <= 1e-9);
  CHECK(s.residuals.dual <= 1e-9);
  CHECK(std::abs(s.objective - s.dual_objective) <= 1e-8 * (1.0 + std::abs(s.objective)));
  for (double x : s.x) CHECK(x >= -1e-12);
  // reduced costs from the returned multipliers
  for (std::size_t j = 0; j < lp.cols; ++j) {
    double r = lp.c[j];
    for (std::size_t i = 0; i < lp.rows; ++i) r -= lp.at(i, j) * s.y[i];
    CHECK(r >= -1e-8);
  }
}

}  // namespace

TEST_CASE("min x subject to x = 1") {
  LinearProgram lp(1, 1);
  lp.at(0, 0) = 1.0;
  lp.b = {1.0};
  lp.c = {1.0};
  auto s = solve_lp(lp);
  REQUIRE(s.status == LPStatus::optimal);
  CHECK(s.objective == doctest::Approx(1.0));
  CHECK(s.y[0] == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded programs") {
  LinearProgram inf(1, 2);
  inf.at(0, 0) = inf.at(0, 1) = 1.0;
  inf.b = {-1.0};
  CHECK(solve_lp(inf).status == LPStatus::infeasible);

  LinearProgram unb(1, 2);
  unb.at(0, 0) = 1.0;
  unb.at(0, 1) = -1.0;
  unb.c = {-1.0, 0.0};
  CHECK(solve_lp(unb).status == LPStatus::unbounded);
}

TEST_CASE("Beale's cycling example terminates at the optimum") {
  LinearProgram lp(3, 7);
  const double rows[3][7] = {{1, 0, 0, 0.25, -8, -1, 9}, {0, 1, 0, 0.5, -12, -0.5, 3}, {0, 0, 1, 0, 0, 1, 0}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 7; ++j) lp.at(i, j) = rows[i][j];
  lp.b = {0, 0, 1};
  lp.c = {0, 0, 0, -0.75, 20, -0.5, 6};
  auto s = solve_lp(lp);
  check_certificates(lp, s);
  CHECK(s.objective == doctest::Approx(-1.25).epsilon(1e-12));
  CHECK(s.objective == doctest::Approx(oracle::vertex_min(to_dense(lp))->value).epsilon(1e-12));
}

TEST_CASE("redundant rows are tolerated") {
  LinearProgram lp(3, 3);
  const double rows[3][3] = {{1, 1, 0}, {0, 1, 1}, {1, 2, 1}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) lp.at(i, j) = rows[i][j];
  lp.b = {1, 1, 2};
  lp.c = {1, 3, 1};
  auto s = solve_lp(lp);
  check_certificates(lp, s);
  CHECK(s.objective == doctest::Approx(2.0));
  CHECK(s.redundant_rows == 1);
}

TEST_CASE("random 6x8 programs agree with vertex enumeration") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const LinearProgram lp = random_bounded_lp(rng, 6, 8);
    const auto s = solve_lp(lp);
    check_certificates(lp, s);
    const auto ref = oracle::vertex_min(to_dense(lp));
    REQUIRE(ref);
    CHECK(std::abs(s.objective - ref->value) <= 1e-8);
  }
}

TEST_CASE("degenerate random programs") {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 100; ++rep) {
    // x0 with many zeros makes many bases degenerate
    LinearProgram lp = random_bounded_lp(rng, 5, 9);
    const auto s = solve_lp(lp);
    check_certificates(lp, s);
    CHECK(std::abs(s.objective - oracle::vertex_min(to_dense(lp))->value) <= 1e-8);
  }
}

TEST_CASE("solve_lp is deterministic") {
  std::mt19937_64 rng(33);
  const LinearProgram lp = random_bounded_lp(rng, 6, 10);
  const auto a = solve_lp(lp), b = solve_lp(lp);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("transport: identity matching and equal Diracs") {
  const std::vector<double> p{0.2, 0.3, 0.5};
  std::vector<double> c(9, 1.0);
  for (int i = 0; i < 3; ++i) c[i * 3 + i] = 0.0;
  auto r = solve_transport(p, p, c);
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<double> one{1.0};
  const std::vector<double> c1{2.5};
  CHECK(solve_transport(one, one, c1).value == doctest::Approx(2.5));
}

TEST_CASE("transport: two-point laws with |a - b|") {
  // p on {1, -1}, q on {2, -2}
  const std::vector<double> p{0.5, 0.5}, q{0.5, 0.5};
  const double c[4] = {1, 3, 3, 1};
  auto r = solve_transport(p, q, c);
  CHECK(r.value == doctest::Approx(oracle::birkhoff_2x2(0.5, 0.5, c)).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.plan[0] == doctest::Approx(0.5));
  CHECK(r.plan[3] == doctest::Approx(0.5));
}

TEST_CASE("transport from a Dirac is forced") {
  const std::vector<double> p{1.0}, q{0.2, 0.3, 0.5}, c{4, 5, 6};
  auto r = solve_transport(p, q, c);
  CHECK(r.value == doctest::Approx(0.2 * 4 + 0.3 * 5 + 0.5 * 6));
  for (std::size_t j = 0; j < 3; ++j) CHECK(r.plan[j] == doctest::Approx(q[j]));
}

TEST_CASE("transport certificates and vertex optimality up to 4x4") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto law = [&](std::size_t n) {
    std::vector<double> w(n);
    for (auto& v : w) v = 0.1 + u(rng);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= s;
    return w;
  };
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rep % 4, m = 1 + (rep / 4) % 4;
    const auto p = law(n), q = law(m);
    std::vector<double> c(n * m);
    for (auto& v : c) v = std::round(8 * u(rng)) / 2;
    const auto r = solve_transport(p, q, c);
    CHECK(r.psi.back() == 0.0);
    double sum = 0.0, dual = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(r.plan[i * m + j] >= -1e-12);
        CHECK(r.phi[i] + r.psi[j] <= c[i * m + j] + 1e-8);
        sum += r.plan[i * m + j] * c[i * m + j];
      }
    for (std::size_t i = 0; i < n; ++i) dual += p[i] * r.phi[i];
    for (std::size_t j = 0; j < m; ++j) dual += q[j] * r.psi[j];
    CHECK(sum == doctest::Approx(r.value).epsilon(1e-12));
    CHECK(std::abs(dual - r.value) <= 1e-8);
    CHECK(r.value <= oracle::transport_min(p, q, c) + 1e-9);
    CHECK(r.value >= oracle::transport_min(p, q, c) - 1e-9);
  }
}

TEST_CASE("permuting atoms permutes the plan and keeps the value") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 3, m = 4;
    std::vector<double> p(n), q(m), c(n * m);
    for (auto& v : p) v = 0.1 + u(rng);
    for (auto& v : q) v = 0.1 + u(rng);
    const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& v : p) v /= sp;
    for (auto& v : q) v /= sq;
    for (auto& v : c) v = u(rng);
    std::vector<std::size_t> pp(n), pq(m);
    std::iota(pp.begin(), pp.end(), 0);
    std::iota(pq.begin(), pq.end(), 0);
    std::shuffle(pp.begin(), pp.end(), rng);
    std::shuffle(pq.begin(), pq.end(), rng);
    std::vector<double> p2(n), q2(m), c2(n * m);
    for (std::size_t i = 0; i < n; ++i) p2[i] = p[pp[i]];
    for (std::size_t j = 0; j < m; ++j) q2[j] = q[pq[j]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) c2[i * m + j] = c[pp[i] * m + pq[j]];
    const auto a = solve_transport(p, q, c), b = solve_transport(p2, q2, c2);
    CHECK(std::abs(a.value - b.value) <= 1e-12);
    // generic costs give a unique optimal plan
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(b.plan[i * m + j] - a.plan[pp[i] * m + pq[j]]) <= 1e-9);
  }
}

TEST_CASE("transport input validation") {
  const std::vector<double> p{0.5, 0.4}, q{1.0}, c{1, 1};
  CHECK_THROWS(solve_transport(p, q, c));
}
