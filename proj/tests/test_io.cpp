#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <functional>

#include "adot/errors.hpp"
#include "adot/instances.hpp"
#include "adot/io.hpp"
#include "helpers.hpp"

using namespace adot;
using io::Json;

namespace {

const std::string kData = ADOT_TEST_DATA;

ProcessPtr load(const std::string& name) {
  return io::process_from_json(io::parse(io::read_file(kData + "/" + name), name));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::NumericalFailure;
}

}  // namespace

TEST_CASE("FNV-1a digests") {
  CHECK(io::digest("") == "cbf29ce484222325");
  CHECK(io::digest("a") == "af63dc4c8601ec8c");
  CHECK(io::digest("foobar") == "85944171f73967e8");
}

TEST_CASE("dump: sorted keys, 17 digits, inline scalar arrays") {
  Json j;
  j["b"] = 1.0;
  j["a"] = Json::array({0.1, 2, "x"});
  j["c"] = Json::object();
  j["d"] = Json::array({Json{{"k", -0.5}}});
  j["e"] = nullptr;
  j["f"] = 1e-20;
  const std::string expected =
      "{\n"
      "  \"a\": [0.10000000000000001, 2, \"x\"],\n"
      "  \"b\": 1.0,\n"
      "  \"c\": {},\n"
      "  \"d\": [\n"
      "    {\n"
      "      \"k\": -0.5\n"
      "    }\n"
      "  ],\n"
      "  \"e\": null,\n"
      "  \"f\": 9.9999999999999995e-21\n"
      "}\n";
  CHECK(io::dump(j) == expected);
}

TEST_CASE("dump round-trips doubles exactly") {
  instances::Rng rng(91);
  for (int k = 0; k < 200; ++k) {
    const double v = instances::uniform(rng, -1e6, 1e6) * std::pow(10.0, instances::uniform_int(rng, -12, 12));
    const Json back = Json::parse(io::dump(Json{{"v", v}}));
    CHECK(back["v"].get<double>() == v);
  }
}

TEST_CASE("process files round-trip") {
  auto mu = load("gap_mu.json");
  CHECK(mu->horizon() == 2);
  CHECK(mu->num_leaves() == 2);
  CHECK(mu->leaf_id(0) == "up.up");
  const Json j = io::process_to_json(*mu);
  auto again = io::process_from_json(io::parse(io::dump(j), "again"));
  CHECK(structurally_equal(*mu, *again));
  CHECK(io::dump(io::process_to_json(*again)) == io::dump(j));

  instances::Rng rng(92);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = instances::random_tree(rng, instances::uniform_int(rng, 1, 3), 3, instances::uniform_int(rng, 1, 2), "p");
    auto q = io::process_from_json(io::parse(io::dump(io::process_to_json(*p)), "q"));
    CHECK(structurally_equal(*p, *q));
    for (std::size_t pos = 0; pos < p->num_nodes(); ++pos) {
      CHECK(p->id(pos) == q->id(pos));
      CHECK(std::abs(p->cond_prob(pos) - q->cond_prob(pos)) <= 1e-15);
    }
  }
}

TEST_CASE("malformed process documents") {
  CHECK(code_of([] { io::parse("{", "x"); }) == ErrorCode::MalformedInput);
  CHECK(code_of([] { io::process_from_json(Json{{"horizon", 1}, {"nodes", Json::array()}}); }) ==
        ErrorCode::MalformedInput);
  CHECK(code_of([] { io::process_from_json(Json{{"dimension", 1.5}, {"horizon", 1}, {"nodes", Json::array()}}); }) ==
        ErrorCode::MalformedInput);
  const Json bad_value = Json::parse(R"({"dimension":1,"horizon":1,"nodes":[{"id":"a","t":1,"value":["x"],"prob":1}]})");
  CHECK(code_of([&] { io::process_from_json(bad_value); }) == ErrorCode::MalformedInput);
  const Json bad_prob = Json::parse(R"({"dimension":1,"horizon":1,"nodes":[{"id":"a","t":1,"value":[0],"prob":0.4}]})");
  CHECK(code_of([&] { io::process_from_json(bad_prob); }) != ErrorCode::MalformedInput);
  CHECK(code_of([] { io::read_file(kData + "/does_not_exist.json"); }) == ErrorCode::MalformedInput);
}

TEST_CASE("cost documents") {
  auto mu = load("gap_mu.json"), nu = load("gap_nu.json");
  const std::vector<ProcessPtr> ms{mu, nu};
  const CostFunction table = io::cost_from_json(io::parse(io::read_file(kData + "/gap_cost.json"), "cost"));
  const std::size_t l01[2] = {0, 1};
  CHECK(evaluate_cost(table, ms, l01) == 2.0);

  const CostFunction partial =
      io::cost_from_json(io::parse(io::read_file(kData + "/gap_cost_incomplete.json"), "cost"));
  const std::size_t l11[2] = {1, 1};
  CHECK(code_of([&] { evaluate_cost(partial, ms, l11); }) == ErrorCode::MissingCostEntry);

  CHECK(evaluate_cost(io::cost_from_json(Json{{"type", "lp_sum"}, {"p", 2}}), ms, l01) == 5.0);
  CHECK(evaluate_cost(io::cost_from_json(Json{{"type", "constant"}, {"value", -3}}), ms, l01) == -3.0);
  CHECK(evaluate_cost(io::cost_from_json(Json{{"type", "terminal_indicator"}}), ms, l01) == 0.0);
  CHECK(code_of([] { io::cost_from_json(Json{{"type", "lp_sum"}, {"p", 3}}); }) == ErrorCode::MalformedInput);
  CHECK(code_of([] { io::cost_from_json(Json{{"type", "nope"}}); }) == ErrorCode::MalformedInput);
  const Json dup = Json::parse(R"({"type":"table","entries":[{"paths":["a","b"],"c":1},{"paths":["a","b"],"c":2}]})");
  CHECK(code_of([&] { io::cost_from_json(dup); }) == ErrorCode::MalformedInput);
}

TEST_CASE("coupling, event and payoff documents") {
  auto mu = load("gap_mu.json"), nu = load("gap_nu.json");
  const std::vector<ProcessPtr> ms{mu, nu};
  const Coupling prod = product(mu, nu);
  const Json j = io::coupling_to_json(prod, {"mu.json", "nu.json"});
  CHECK(j["marginals"] == Json::array({"mu.json", "nu.json"}));
  const Coupling back = io::coupling_from_json(j, ms);
  REQUIRE(back.entries().size() == prod.entries().size());
  for (std::size_t k = 0; k < back.entries().size(); ++k) {
    CHECK(back.entries()[k].leaves == prod.entries()[k].leaves);
    CHECK(back.entries()[k].mass == prod.entries()[k].mass);
  }
  const Json neg = Json::parse(R"({"mass":[{"paths":["up.up","flat.up"],"p":-0.5}]})");
  CHECK(code_of([&] { io::coupling_from_json(neg, ms); }) == ErrorCode::MalformedInput);
  const Json unknown = Json::parse(R"({"mass":[{"paths":["up","flat.up"],"p":1}]})");
  CHECK(code_of([&] { io::coupling_from_json(unknown, ms); }) == ErrorCode::MalformedInput);

  CHECK(io::event_from_json(io::parse(io::read_file(kData + "/empty_event.json"), "e"), ms).empty());
  const Event e = io::event_from_json(Json::parse(R"({"tuples":[["down.down","flat.up"]]})"), ms);
  CHECK(e == Event{{1, 0}});

  const Json payoff = Json::parse(R"({
    "entries": [
      {"paths": ["up.up", "flat.up"], "xi": 1},
      {"paths": ["up.up", "flat.down"], "xi": 0},
      {"paths": ["down.down", "flat.up"], "xi": 0},
      {"paths": ["down.down", "flat.down"], "xi": 1}],
    "bounds": [{"up.up": 0.5, "down.down": 0.5}, {"flat.up": 0.5, "flat.down": 0.5}]})");
  const Payoff p = io::payoff_from_json(payoff, ms);
  REQUIRE(p.bounds.size() == 2);
  CHECK(p.bounds[1][0] == 0.5);
  Json missing = payoff;
  missing["bounds"][1].erase("flat.down");
  CHECK(code_of([&] { io::payoff_from_json(missing, ms); }) == ErrorCode::MalformedInput);
}

TEST_CASE("support documents") {
  const Json ok = Json::parse(R"({"paths":[{"id":"a","values":[[0],[1]]},{"id":"b","values":[[0],[2]]}]})");
  const CandidateSupport s = io::support_from_json(ok);
  CHECK(s.horizon == 2);
  CHECK(s.dimension == 1);
  CHECK(code_of([] { io::support_from_json(Json{{"paths", Json::array()}}); }) == ErrorCode::EmptySupport);
  const Json ragged = Json::parse(R"({"paths":[{"id":"a","values":[[0],[1]]},{"id":"b","values":[[0]]}]})");
  CHECK(code_of([&] { io::support_from_json(ragged); }) == ErrorCode::MalformedInput);
}

TEST_CASE("dual and strategy serialization use node ids") {
  auto mu = th::gap_mu(), nu = th::gap_nu();
  const CostFunction c("gap", th::terminal_gap);
  const auto r = solve_adapted_lp({mu, nu}, c, Mode::causal);
  const Json d = io::dual_to_json(extract_dual(r, c));
  CHECK(d["mode"] == "causal");
  CHECK(d["parts"].size() == 2);
  CHECK(d["parts"][0]["initial"].contains("u"));
  CHECK(d["parts"][1]["terminal"].contains("ru"));

  const auto file = std::filesystem::temp_directory_path() / "adot_io_test.json";
  io::write_file(file.string(), io::dump(d));
  CHECK(io::parse(io::read_file(file.string()), "dual") == Json::parse(io::dump(d)));
  std::filesystem::remove(file);
}
