#include <cmath>
#include <cstdlib>
#include <random>

#include <CLI11.hpp>

#include "adot/barycenter.hpp"
#include "adot/bicausal_dp.hpp"
#include "adot/causal_solver.hpp"
#include "adot/cli.hpp"
#include "adot/errors.hpp"
#include "adot/hedging.hpp"
#include "adot/instances.hpp"
#include "adot/polar.hpp"
#include "report.hpp"

namespace adot::cli {

namespace {

using io::Json;

struct Options {
  std::string mode = "multicausal";
  std::vector<std::string> marginals;
  std::string cost;
  std::vector<std::string> costs;
  std::string payoff;
  std::string event;
  std::string support;
  std::vector<std::string> candidates;
  std::vector<std::string> processes;
  std::string coupling_in;
  std::string tree_out;
  std::string out;
  bool dual = false;
  bool coupling = false;
  bool least_squares = false;
  unsigned threads = 1;
  double tol = kDerivedTol;
  std::size_t count = 20;
};

struct Context {
  const Options& opt;
  RunReport& report;
  Stopwatch clock;

  ProcessPtr load_process(const std::string& role, const std::string& path) {
    return io::process_from_json(io::parse(report.load(role, path), path));
  }
  std::vector<ProcessPtr> load_marginals() {
    if (opt.marginals.empty()) fail(ErrorCode::MalformedInput, "--marginals is required");
    std::vector<ProcessPtr> ms;
    for (const auto& path : opt.marginals) ms.push_back(load_process("marginal", path));
    return ms;
  }
  CostFunction load_cost(const std::string& path) {
    return io::cost_from_json(io::parse(report.load("cost", path), path));
  }
  std::vector<CostFunction> load_costs(std::size_t n) {
    if (!opt.costs.empty()) {
      if (opt.costs.size() != n) fail(ErrorCode::MalformedInput, "--costs needs one file per marginal");
      std::vector<CostFunction> cs;
      for (const auto& path : opt.costs) cs.push_back(load_cost(path));
      return cs;
    }
    if (opt.cost.empty()) fail(ErrorCode::MalformedInput, "--cost or --costs is required");
    return std::vector<CostFunction>(n, load_cost(opt.cost));
  }
  Json load_json(const std::string& role, const std::string& path) {
    return io::parse(report.load(role, path), path);
  }
  void diagnostics(double gap, double residual, std::size_t iterations) {
    report.set_diagnostics(Diagnostics{gap, residual, iterations, clock.elapsed_ms()});
  }
};

Json coupling_check_json(const CouplingReport& r) {
  Json j{{"ok", r.ok}, {"mode", std::string(mode_name(r.mode))}, {"worst_violation", r.worst_violation}};
  if (!r.witness.empty()) j["witness"] = r.witness;
  return j;
}

void require_feasible(const CouplingReport& r) {
  if (!r.ok) fail(ErrorCode::NumericalFailure, "optimal coupling fails its constraints: " + r.witness);
}

void cmd_solve(Context& ctx) {
  const Options& opt = ctx.opt;
  const Mode mode = parse_mode(opt.mode);
  const auto ms = ctx.load_marginals();
  const CostFunction c = ctx.load_cost(opt.cost);

  if (mode == Mode::bicausal) {
    if (ms.size() != 2) fail(ErrorCode::PreconditionViolation, "bicausal mode needs exactly two marginals");
    DPOptions dp;
    dp.threads = opt.threads;
    const BicausalSolution sol = solve_bicausal(ms[0], ms[1], c, dp);
    const CouplingReport check = check_coupling(sol.coupling, mode, opt.tol);
    require_feasible(check);
    const DualPotential dual = dual_from_value(sol, c);
    const double gap = std::max(std::abs(dual.dual_value() - sol.value), sol.max_local_gap);
    ctx.report.set_value(sol.value);
    ctx.report.add_payload("coupling_check", coupling_check_json(check));
    if (opt.dual) ctx.report.add_payload("dual", io::dual_to_json(dual));
    if (opt.coupling) ctx.report.add_payload("coupling", io::coupling_to_json(sol.coupling, opt.marginals));
    ctx.diagnostics(gap, check.worst_violation, sol.lp_iterations);
    return;
  }

  const AdaptedResult res = solve_adapted_lp(ms, c, mode);
  const CouplingReport check = check_coupling(res.coupling, mode, opt.tol);
  require_feasible(check);
  ctx.report.set_value(res.value);
  ctx.report.add_payload("coupling_check", coupling_check_json(check));
  if (opt.dual) ctx.report.add_payload("dual", io::dual_to_json(extract_dual(res, c)));
  if (opt.coupling) ctx.report.add_payload("coupling", io::coupling_to_json(res.coupling, opt.marginals));
  ctx.diagnostics(res.lp.residuals.gap, std::max(res.lp.residuals.primal, check.worst_violation),
                  res.lp.iterations);
}

void cmd_hedge(Context& ctx) {
  const Options& opt = ctx.opt;
  const auto ms = ctx.load_marginals();
  if (opt.payoff.empty()) fail(ErrorCode::MalformedInput, "--payoff is required");
  const Payoff payoff = io::payoff_from_json(ctx.load_json("payoff", opt.payoff), ms);

  const PriceResult price = superhedge_price(ms, payoff);
  const DualPotential dual = extract_dual(price.lp, negated(payoff.xi));
  const Strategy strategy = extract_strategy(ms, dual, opt.least_squares);
  const SuperhedgeReport sh = verify_superhedge(strategy, ms, payoff.xi, &price.worst_case_model);
  if (!sh.ok) fail(ErrorCode::NumericalFailure, "strategy does not superhedge: " + sh.witness);
  const NAReport na = check_na(price.worst_case_model, opt.tol);

  ctx.report.set_value(price.price);
  ctx.report.add_payload("worst_case_model", io::coupling_to_json(price.worst_case_model, opt.marginals));
  ctx.report.add_payload("strategy", io::strategy_to_json(strategy, ms));
  ctx.report.add_payload("superhedge_check", Json{{"ok", sh.ok},
                                                  {"dominates", sh.dominates},
                                                  {"replicates", sh.replicates},
                                                  {"min_slack", sh.min_slack},
                                                  {"max_support_gap", sh.max_support_gap},
                                                  {"expectation_gap", sh.expectation_gap}});
  ctx.report.add_payload("model_check", Json{{"joint_martingale", na.joint_martingale},
                                             {"multicausal", na.multicausal},
                                             {"martingale_violation", na.martingale_violation},
                                             {"causality_violation", na.causality_violation}});
  if (opt.dual) ctx.report.add_payload("dual", io::dual_to_json(dual));
  ctx.diagnostics(price.lp.lp.residuals.gap, price.lp.lp.residuals.primal, price.lp.lp.iterations);
}

void cmd_barycenter(Context& ctx) {
  const Options& opt = ctx.opt;
  const auto ms = ctx.load_marginals();
  const auto costs = ctx.load_costs(ms.size());

  if (!opt.candidates.empty()) {
    std::vector<ProcessPtr> cands;
    for (const auto& path : opt.candidates) cands.push_back(ctx.load_process("candidate", path));
    DPOptions dp;
    dp.threads = opt.threads;
    const SearchResult sr = bicausal_barycenter_search(ms, costs, cands, dp);
    // re-solve the winner to audit its local transports
    double gap = 0.0, residual = 0.0;
    std::size_t iterations = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const BicausalSolution sol = solve_bicausal(ms[i], cands[sr.best], costs[i], dp);
      const CouplingReport check = check_coupling(sol.coupling, Mode::bicausal, opt.tol);
      require_feasible(check);
      gap = std::max(gap, sol.max_local_gap);
      residual = std::max(residual, check.worst_violation);
      iterations += sol.lp_iterations;
    }
    Json values = Json::array();
    for (std::size_t k = 0; k < cands.size(); ++k)
      values.push_back(Json{{"candidate", opt.candidates[k]}, {"value", sr.values[k]}});
    ctx.report.set_value(sr.value);
    ctx.report.add_payload("best", opt.candidates[sr.best]);
    ctx.report.add_payload("candidates", std::move(values));
    ctx.diagnostics(gap, residual, iterations);
    return;
  }

  if (opt.support.empty()) fail(ErrorCode::MalformedInput, "--support or --candidates is required");
  const CandidateSupport support = io::support_from_json(ctx.load_json("support", opt.support));
  const BarycenterResult res = causal_barycenter(ms, costs, support);
  const BarycenterDualReport dr = verify_barycenter_dual(res.dual, ms, costs, support, res.value);
  if (!dr.ok) fail(ErrorCode::DualVerificationFailed, "barycenter dual: " + dr.witness);

  double residual = res.lp.residuals.primal;
  for (const Coupling& pi : res.couplings) {
    const CouplingReport check = check_coupling(pi, Mode::causal, opt.tol);
    require_feasible(check);
    residual = std::max(residual, check.worst_violation);
  }
  Json weights = Json::object();
  for (std::size_t a = 0; a < support.paths.size(); ++a) weights[support.paths[a].id] = res.weights[a];
  ctx.report.set_value(res.value);
  ctx.report.add_payload("weights", std::move(weights));
  ctx.report.add_payload("barycenter", io::process_to_json(*res.nu));
  ctx.report.add_payload("dual_check", Json{{"ok", dr.ok},
                                            {"max_congruency", dr.max_congruency},
                                            {"max_excess", dr.max_excess},
                                            {"max_compensator_mean", dr.max_compensator_mean},
                                            {"value_gap", dr.value_gap}});
  if (opt.dual) ctx.report.add_payload("dual", io::barycenter_dual_to_json(res.dual, ms, support));
  if (opt.coupling) {
    Json cs = Json::array();
    for (std::size_t i = 0; i < res.couplings.size(); ++i)
      cs.push_back(io::coupling_to_json(res.couplings[i], {opt.marginals[i], "barycenter"}));
    ctx.report.add_payload("couplings", std::move(cs));
  }
  ctx.diagnostics(res.lp.residuals.gap, residual, res.lp.iterations);
}

void cmd_polar(Context& ctx) {
  const Options& opt = ctx.opt;
  const Mode mode = parse_mode(opt.mode);
  const auto ms = ctx.load_marginals();
  if (opt.event.empty()) fail(ErrorCode::MalformedInput, "--event is required");
  const Event e = io::event_from_json(ctx.load_json("event", opt.event), ms);

  const AdaptedResult res = solve_adapted_lp(ms, event_cost(e, ms), mode);
  const double value = 0.0 - res.value;
  const bool polar = value <= kInputTol;
  ctx.report.set_value(value);
  ctx.report.add_payload("polar", polar);
  if (polar) ctx.report.add_payload("certificate", io::certificate_to_json(polar_certificate(e, ms, mode), ms));
  if (opt.coupling) ctx.report.add_payload("coupling", io::coupling_to_json(res.coupling, opt.marginals));
  ctx.diagnostics(res.lp.residuals.gap, res.lp.residuals.primal, res.lp.iterations);
}

void cmd_canonicalize(Context& ctx) {
  const Options& opt = ctx.opt;
  if (opt.processes.size() != 1) fail(ErrorCode::MalformedInput, "--process takes exactly one file");
  const ProcessPtr p = ctx.load_process("process", opt.processes[0]);
  const ProcessPtr canon = canonicalize(*p);
  const Json tree = io::process_to_json(*canon);
  if (!opt.tree_out.empty()) io::write_file(opt.tree_out, io::dump(tree));

  DPOptions dp;
  dp.threads = opt.threads;
  const BicausalSolution sol = solve_bicausal(canon, p, lp_sum(1), dp);
  if (sol.value > opt.tol)
    fail(ErrorCode::NumericalFailure, "canonical tree is not at adapted distance 0 from the input");
  ctx.report.set_value(Json{{"nodes_before", p->num_nodes()},
                            {"nodes_after", canon->num_nodes()},
                            {"adapted_distance", sol.value}});
  ctx.report.add_payload("tree", tree);
  ctx.diagnostics(sol.max_local_gap, 0.0, sol.lp_iterations);
}

void cmd_validate(Context& ctx) {
  const Options& opt = ctx.opt;
  Json files = Json::array();
  for (const auto& path : opt.processes) {
    const ProcessPtr p = ctx.load_process("process", path);
    const MartingaleReport mr = is_martingale(*p);
    files.push_back(Json{{"path", path},
                         {"horizon", p->horizon()},
                         {"dimension", p->dimension()},
                         {"nodes", p->num_nodes()},
                         {"leaves", p->num_leaves()},
                         {"martingale", mr.ok},
                         {"martingale_violation", mr.worst_violation}});
  }
  bool ok = true;
  if (!opt.coupling_in.empty()) {
    const auto ms = ctx.load_marginals();
    const Coupling pi = io::coupling_from_json(ctx.load_json("coupling", opt.coupling_in), ms);
    const CouplingReport r = check_coupling(pi, parse_mode(opt.mode), opt.tol);
    ok = r.ok;
    ctx.report.add_payload("coupling_check", coupling_check_json(r));
  }
  ctx.report.set_value(Json{{"valid", ok}, {"processes", std::move(files)}});
  if (!ok) ctx.report.set_status(kInputError, "CouplingRejected", "coupling violates the requested constraints");
}

void cmd_selftest(Context& ctx) {
  const Options& opt = ctx.opt;
  std::uint64_t seed = 1;
  if (const char* env = std::getenv("ADOT_SEED")) seed = std::strtoull(env, nullptr, 10);
  instances::Rng rng(seed);
  double worst = 0.0, gap = 0.0;
  std::size_t iterations = 0;
  for (std::size_t k = 0; k < opt.count; ++k) {
    const int T = instances::uniform_int(rng, 1, 3);
    const int d = instances::uniform_int(rng, 1, 2);
    const auto x = instances::random_tree(rng, T, 3, d, "x");
    const auto y = instances::random_tree(rng, T, 3, d, "y");
    const CostFunction c = lp_sum(instances::uniform_int(rng, 1, 2));
    const BicausalSolution dp = solve_bicausal(x, y, c);
    const AdaptedResult lp = solve_adapted_lp({x, y}, c, Mode::bicausal);
    worst = std::max(worst, std::abs(dp.value - lp.value));
    gap = std::max({gap, dp.max_local_gap, lp.lp.residuals.gap});
    iterations += dp.lp_iterations + lp.lp.iterations;
  }
  ctx.report.set_value(Json{{"seed", seed}, {"instances", opt.count}, {"max_dp_lp_difference", worst}});
  ctx.diagnostics(gap, 0.0, iterations);
  if (worst > opt.tol)
    fail(ErrorCode::NumericalFailure, "dynamic programming and LP values differ by " + std::to_string(worst));
}

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--out", opt.out, "Write the report to this file");
  sub->add_option("--tol", opt.tol, "Tolerance for derived quantities")->capture_default_str();
  sub->add_option("--threads", opt.threads, "Thread cap for dynamic programming")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Adapted optimal transport on finite filtered processes"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Adapted transport between marginals");
  solve->add_option("--mode", opt.mode, "causal | bicausal | multicausal | anticausal | plain")->required();
  solve->add_option("--marginals", opt.marginals, "Process files")->required();
  solve->add_option("--cost", opt.cost, "Cost file")->required();
  solve->add_flag("--dual", opt.dual, "Include the dual potential");
  solve->add_flag("--coupling", opt.coupling, "Include the optimal coupling");

  auto* hedge = app.add_subcommand("hedge", "Robust superhedging price and strategy");
  hedge->add_option("--marginals", opt.marginals, "Martingale process files")->required();
  hedge->add_option("--payoff", opt.payoff, "Payoff file")->required();
  hedge->add_flag("--least-squares", opt.least_squares, "Allow least squares at nodes with many children");
  hedge->add_flag("--dual", opt.dual, "Include the dual potential");

  auto* bary = app.add_subcommand("barycenter", "Adapted barycenter");
  bary->add_option("--marginals", opt.marginals, "Process files")->required();
  bary->add_option("--support", opt.support, "Candidate support file (causal barycenter)");
  bary->add_option("--candidates", opt.candidates, "Candidate process files (bicausal search)");
  bary->add_option("--cost", opt.cost, "Cost file shared by all marginals");
  bary->add_option("--costs", opt.costs, "One cost file per marginal");
  bary->add_flag("--dual", opt.dual, "Include the dual");
  bary->add_flag("--coupling", opt.coupling, "Include the couplings");

  auto* polar = app.add_subcommand("polar", "Polarity of an event with certificate");
  polar->add_option("--marginals", opt.marginals, "Process files")->required();
  polar->add_option("--event", opt.event, "Event file")->required();
  polar->add_option("--mode", opt.mode, "causal | bicausal | multicausal")->capture_default_str();
  polar->add_flag("--coupling", opt.coupling, "Include the maximizing coupling");

  auto* canon = app.add_subcommand("canonicalize", "Merge indistinguishable sibling branches");
  canon->add_option("--process", opt.processes, "Process file")->required();
  canon->add_option("--tree-out", opt.tree_out, "Write the canonical tree here");

  auto* validate = app.add_subcommand("validate", "Check process files and optionally a coupling");
  validate->add_option("--process", opt.processes, "Process files");
  validate->add_option("--marginals", opt.marginals, "Marginals of the coupling");
  validate->add_option("--coupling", opt.coupling_in, "Coupling file");
  validate->add_option("--mode", opt.mode, "Constraint set for the coupling")->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "Random dynamic programming versus LP cross-check");
  selftest->add_option("--count", opt.count, "Number of instances")->capture_default_str();

  for (auto* sub : {solve, hedge, bary, polar, canon, validate, selftest}) add_common(sub, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  RunReport report(args);
  Context ctx{opt, report, Stopwatch{}};
  int code = kOk;
  try {
    if (*solve) cmd_solve(ctx);
    else if (*hedge) cmd_hedge(ctx);
    else if (*bary) cmd_barycenter(ctx);
    else if (*polar) cmd_polar(ctx);
    else if (*canon) cmd_canonicalize(ctx);
    else if (*validate) cmd_validate(ctx);
    else if (*selftest) cmd_selftest(ctx);
    code = report.to_json()["status"]["code"].get<int>();
  } catch (const Error& e) {
    code = is_numerical(e.code()) ? kNumericalError : kInputError;
    report.set_status(code, std::string(error_name(e.code())), e.what());
    err << e.what() << "\n";
  } catch (const std::exception& e) {
    code = kNumericalError;
    report.set_status(code, "InternalError", e.what());
    err << "InternalError: " << e.what() << "\n";
  }

  const std::string text = io::dump(report.to_json());
  if (opt.out.empty()) {
    out << text;
  } else {
    try {
      io::write_file(opt.out, text);
    } catch (const Error& e) {
      err << e.what() << "\n";
      return kInputError;
    }
  }
  return code;
}

}  // namespace adot::cli
