#include <doctest.h>

#include <functional>
#include <map>

#include "adot/errors.hpp"
#include "adot/hedging.hpp"
#include "adot/instances.hpp"
#include "helpers.hpp"

using namespace adot;
using th::node;

namespace {

struct Hedge {
  PriceResult price;
  DualPotential dual;
  Strategy strategy;
};

Hedge hedge(const std::vector<ProcessPtr>& ms, const CostFunction& xi, bool ls = false) {
  Hedge h;
  h.price = superhedge_price(ms, Payoff{xi, {}});
  h.dual = extract_dual(h.price.lp, negated(xi));
  h.strategy = extract_strategy(ms, h.dual, ls);
  return h;
}

// classical replication of f(X_T) on a binomial martingale tree:
// node value and delta held from the node over the next step
struct Replication {
  std::map<std::size_t, double> value, delta;
  double delta0 = 0.0;
};

Replication replicate(const FilteredProcess& m, const std::function<double(double)>& f) {
  Replication r;
  const int T = m.horizon();
  for (int t = T; t >= 1; --t) {
    auto [b, e] = m.nodes_at(t);
    for (std::size_t pos = b; pos < e; ++pos) {
      if (t == T) {
        r.value[pos] = f(m.value(pos)[0]);
        continue;
      }
      auto [cb, ce] = m.children(pos);
      double v = 0.0;
      for (std::size_t c = cb; c < ce; ++c) v += m.cond_prob(c) * r.value[c];
      r.value[pos] = v;
      r.delta[pos] = (r.value[cb] - r.value[cb + 1]) / (m.value(cb)[0] - m.value(cb + 1)[0]);
    }
  }
  auto [b, e] = m.nodes_at(1);
  if (e - b == 2) r.delta0 = (r.value[b] - r.value[b + 1]) / (m.value(b)[0] - m.value(b + 1)[0]);
  return r;
}

double expectation(const FilteredProcess& m, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t l = 0; l < m.num_leaves(); ++l) s += m.leaf_prob(l) * f(m.leaf_path(l).values.back()[0]);
  return s;
}

ProcessPtr one_step(const std::string& p) {
  return th::tree(1, {node(p + "+", 1, 1, .5), node(p + "-", 1, -1, .5)});
}

}  // namespace

TEST_CASE("constant payoff: price kappa, zero deltas") {
  instances::Rng rng(61);
  auto a = instances::random_binomial_martingale(rng, 2, "a");
  auto b = instances::random_binomial_martingale(rng, 2, "b");
  const auto h = hedge({a, b}, constant_cost(3.25));
  CHECK(h.price.price == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(h.strategy.p0 == doctest::Approx(3.25).epsilon(1e-12));
  for (const auto& step : h.strategy.delta)
    for (const auto& [prefix, d] : step)
      for (double v : d) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("matching indicator on one-step binomials: price 1 via the comonotone model") {
  auto a = one_step("a"), b = one_step("b");
  const auto h = hedge({a, b}, terminal_indicator());
  CHECK(h.price.price == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& e : h.price.worst_case_model.entries()) CHECK(e.leaves[0] == e.leaves[1]);
  CHECK(verify_superhedge(h.strategy, {a, b}, terminal_indicator(), &h.price.worst_case_model).ok);
}

TEST_CASE("separable payoff: price is the sum of expectations, deltas replicate each leg") {
  instances::Rng rng(62);
  for (int rep = 0; rep < 10; ++rep) {
    const int T = instances::uniform_int(rng, 1, 3);
    auto a = instances::random_binomial_martingale(rng, T, "a");
    auto b = instances::random_binomial_martingale(rng, T, "b");
    const double k = 0.25 * instances::uniform_int(rng, -4, 4);
    const std::function<double(double)> call = [k](double x) { return std::max(x - k, 0.0); };
    const std::function<double(double)> square = [](double x) { return x * x; };
    const CostFunction xi("separable", [&](std::span<const PathRef> p) {
      return call(p[0].values.back()[0]) + square(p[1].values.back()[0]);
    });
    const auto h = hedge({a, b}, xi);
    const double expected = expectation(*a, call) + expectation(*b, square);
    CHECK(h.price.price == doctest::Approx(expected).epsilon(1e-10));
    CHECK(h.strategy.p0 == doctest::Approx(expected).epsilon(1e-9));

    const Replication ra = replicate(*a, call), rb = replicate(*b, square);
    const auto& d0 = h.strategy.delta[0].at({});
    CHECK(d0[0] == doctest::Approx(ra.delta0).epsilon(1e-9));
    CHECK(d0[1] == doctest::Approx(rb.delta0).epsilon(1e-9));
    for (int t = 1; t < T; ++t)
      for (const auto& [prefix, d] : h.strategy.delta[t]) {
        CHECK(d[0] == doctest::Approx(ra.delta.at(prefix[0])).epsilon(1e-9));
        CHECK(d[1] == doctest::Approx(rb.delta.at(prefix[1])).epsilon(1e-9));
      }
  }
}

TEST_CASE("trinomial node is an incomplete market") {
  auto tri = th::tree(2, {node("r", 1, 0, 1), node("u", 2, 1, .25, "r"), node("m", 2, 0, .5, "r"),
                          node("d", 2, -1, .25, "r")});
  auto bin = th::binomial(1, "b");
  const CostFunction xi("square", [](std::span<const PathRef> p) {
    const double x = p[0].values.back()[0];
    return x * x;
  });
  const PriceResult price = superhedge_price({tri, bin}, Payoff{xi, {}});
  CHECK(price.price == doctest::Approx(0.5));
  const DualPotential dual = extract_dual(price.lp, negated(xi));
  for (bool ls : {false, true}) {
    try {
      extract_strategy({tri, bin}, dual, ls);
      FAIL("trinomial payoff hedged");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IncompleteMarket);
    }
  }
}

TEST_CASE("least squares succeeds when the increment is linear") {
  auto tri = th::tree(2, {node("r", 1, 0, 1), node("u", 2, 1, .25, "r"), node("m", 2, 0, .5, "r"),
                          node("d", 2, -1, .25, "r")});
  auto bin = th::binomial(1, "b");
  const CostFunction xi("linear", [](std::span<const PathRef> p) { return 2.0 * p[0].values.back()[0]; });
  const auto h = hedge({tri, bin}, xi, true);
  CHECK(h.strategy.delta[1].begin()->second[0] == doctest::Approx(2.0));
  CHECK(verify_superhedge(h.strategy, {tri, bin}, xi, &h.price.worst_case_model).ok);
}

TEST_CASE("superhedge verification reports failures") {
  auto a = th::binomial(1, "a"), b = th::binomial(2, "b");
  const CostFunction xi("product", [](std::span<const PathRef> p) {
    return p[0].values.back()[0] * p[1].values.back()[0];
  });
  const auto h = hedge({a, b}, xi);
  CHECK(verify_superhedge(h.strategy, {a, b}, xi, &h.price.worst_case_model).ok);

  // zero deltas above max xi dominate but do not replicate
  Strategy flat = h.strategy;
  flat.p0 = 2.5;
  for (auto& step : flat.delta)
    for (auto& [prefix, d] : step) std::fill(d.begin(), d.end(), 0.0);
  const auto r = verify_superhedge(flat, {a, b}, xi, &h.price.worst_case_model);
  CHECK(r.dominates);
  CHECK_FALSE(r.replicates);
  CHECK_FALSE(r.ok);

  // a perturbed delta is dominated somewhere
  Strategy bumped = h.strategy;
  bumped.delta[1].begin()->second[0] += 0.1;
  const auto rb = verify_superhedge(bumped, {a, b}, xi, nullptr);
  CHECK_FALSE(rb.dominates);
  CHECK(rb.min_slack < -1e-7);
  CHECK_FALSE(rb.witness.empty());
}

TEST_CASE("NA check") {
  SUBCASE("product of binomial martingales") {
    auto a = th::binomial(1, "a"), b = th::binomial(2, "b");
    const auto r = check_na(product(a, b));
    CHECK(r.joint_martingale);
    CHECK(r.multicausal);
    CHECK(r.agree);
  }
  SUBCASE("second step of one asset tied to the first step of the other") {
    auto a = th::tree(2, {node("r", 1, 0, 1), node("ru", 2, 1, .5, "r"), node("rd", 2, -1, .5, "r")});
    auto b = th::tree(2, {node("u", 1, 1, .5), node("d", 1, -1, .5), node("uu", 2, 1, 1, "u"),
                          node("dd", 2, -1, 1, "d")});
    const Coupling pi({a, b}, {{{0, 0}, .5}, {{1, 1}, .5}});
    const auto r = check_na(pi);
    CHECK_FALSE(r.joint_martingale);
    CHECK_FALSE(r.multicausal);
    CHECK(r.agree);
    CHECK(r.martingale_violation == doctest::Approx(1.0));
  }
  SUBCASE("one period: any coupling") {
    auto a = one_step("a"), b = one_step("b");
    const Coupling pi({a, b}, {{{0, 1}, .5}, {{1, 0}, .5}});
    CHECK(check_na(pi).joint_martingale);
    CHECK(check_na(pi).agree);
  }
  SUBCASE("non-martingale marginal") {
    auto bad = th::tree(2, {node("r", 1, 0, 1), node("u", 2, 1, .9, "r"), node("d", 2, -1, .1, "r")});
    try {
      check_na(product(bad, bad));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotMartingaleMarginal);
    }
  }
}

TEST_CASE("pricing rejects bad inputs") {
  auto two_d = th::tree(1, {NodeSpec{"p", 1, {1, 1}, .5, {}}, NodeSpec{"q", 1, {-1, -1}, .5, {}}}, 2);
  auto one = one_step("o");
  try {
    superhedge_price({two_d, one}, Payoff{constant_cost(0), {}});
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
  // bound witnesses that do not dominate
  Payoff p{constant_cost(1.0), {{0.0, 0.0}, {0.0, 0.0}}};
  CHECK_THROWS_AS(superhedge_price({one, one}, p), Error);
  Payoff ok{constant_cost(1.0), {{0.5, 0.5}, {0.5, 0.5}}};
  CHECK(superhedge_price({one, one}, ok).price == doctest::Approx(1.0));
}

TEST_CASE("price is monotone, shifts with constants and matches the bicausal price") {
  instances::Rng rng(63);
  for (int rep = 0; rep < 20; ++rep) {
    const int T = instances::uniform_int(rng, 1, 3);
    auto a = instances::random_binomial_martingale(rng, T, "a");
    auto b = instances::random_binomial_martingale(rng, T, "b");
    std::vector<ProcessPtr> ms{a, b};
    const CostFunction xi = instances::random_table_cost(rng, ms, -1, 1);
    const double p = superhedge_price(ms, Payoff{xi, {}}).price;
    CHECK(superhedge_price(ms, Payoff{shifted(xi, 0.75), {}}).price == doctest::Approx(p + 0.75).epsilon(1e-10));
    const CostFunction bigger("bigger", [xi](std::span<const PathRef> q) { return std::max(xi(q), 0.0); });
    CHECK(superhedge_price(ms, Payoff{bigger, {}}).price >= p - 1e-12);
    CHECK(std::abs(p + solve_adapted_lp(ms, negated(xi), Mode::bicausal).value) <= 1e-8);
  }
}

TEST_CASE("round trip on random two-asset binomial instances") {
  instances::Rng rng(64);
  for (int rep = 0; rep < 30; ++rep) {
    const int T = instances::uniform_int(rng, 1, 3);
    auto a = instances::random_binomial_martingale(rng, T, "a");
    auto b = instances::random_binomial_martingale(rng, T, "b");
    std::vector<ProcessPtr> ms{a, b};
    const CostFunction xi = instances::random_table_cost(rng, ms, -2, 2);
    const auto h = hedge(ms, xi);
    CHECK(std::abs(h.strategy.p0 - h.price.price) <= 1e-7);
    const auto r = verify_superhedge(h.strategy, ms, xi, &h.price.worst_case_model);
    CHECK(r.ok);
    CHECK(r.min_slack >= -1e-7);
    CHECK(r.expectation_gap <= 1e-7);
  }
}
