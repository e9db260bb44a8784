#include "adot/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adot/errors.hpp"

namespace adot::io {

namespace {

const Json& require(const Json& obj, const char* key, const std::string& what) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::MalformedInput, what + ": missing \"" + key + "\"");
  return obj.at(key);
}

double as_number(const Json& j, const std::string& what) {
  if (!j.is_number()) fail(ErrorCode::MalformedInput, what + ": expected a number");
  return j.get<double>();
}

std::string as_string(const Json& j, const std::string& what) {
  if (!j.is_string()) fail(ErrorCode::MalformedInput, what + ": expected a string");
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorCode::MalformedInput, what + ": expected an array");
  return j;
}

std::vector<std::size_t> leaf_tuple(const Json& paths, const std::vector<ProcessPtr>& marginals,
                                    const std::string& what) {
  as_array(paths, what);
  if (paths.size() != marginals.size())
    fail(ErrorCode::MalformedInput, what + ": expected " + std::to_string(marginals.size()) + " leaf ids, got " +
                                        std::to_string(paths.size()));
  std::vector<std::size_t> leaves(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string id = as_string(paths[i], what);
    auto leaf = marginals[i]->find_leaf(id);
    if (!leaf) fail(ErrorCode::MalformedInput, what + ": \"" + id + "\" is not a leaf of marginal " + std::to_string(i));
    leaves[i] = *leaf;
  }
  return leaves;
}

Json id_key(const std::vector<std::size_t>& key, const std::vector<const FilteredProcess*>& owners) {
  Json arr = Json::array();
  for (std::size_t k = 0; k < key.size(); ++k) {
    if (key[k] == FilteredProcess::npos)
      arr.push_back(nullptr);
    else
      arr.push_back(owners[k]->id(key[k]));
  }
  return arr;
}

void dump_into(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        dump_into(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && !e.is_structured();
      if (scalar) {
        out += "[";
        for (std::size_t k = 0; k < j.size(); ++k) {
          if (k) out += ", ";
          dump_into(j[k], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ",\n";
        out += inner;
        dump_into(j[k], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MalformedInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::MalformedInput, "cannot write " + path);
  out << content;
}

std::string digest(const std::string& content) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : content) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Json parse(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::MalformedInput, what + ": " + e.what());
  }
}

ProcessPtr process_from_json(const Json& doc) {
  const std::string what = "process";
  const Json& dim = require(doc, "dimension", what);
  const Json& hor = require(doc, "horizon", what);
  if (!dim.is_number_integer() || !hor.is_number_integer())
    fail(ErrorCode::MalformedInput, "process: dimension and horizon must be integers");
  std::vector<NodeSpec> specs;
  for (const Json& n : as_array(require(doc, "nodes", what), "process.nodes")) {
    NodeSpec s;
    s.id = as_string(require(n, "id", "node"), "node.id");
    const std::string ctx = "node \"" + s.id + "\"";
    const Json& t = require(n, "t", ctx);
    if (!t.is_number_integer()) fail(ErrorCode::MalformedInput, ctx + ": t must be an integer");
    s.t = t.get<int>();
    for (const Json& v : as_array(require(n, "value", ctx), ctx + ".value")) s.value.push_back(as_number(v, ctx));
    s.prob = as_number(require(n, "prob", ctx), ctx + ".prob");
    if (n.contains("parent") && !n.at("parent").is_null()) s.parent = as_string(n.at("parent"), ctx + ".parent");
    specs.push_back(std::move(s));
  }
  return FilteredProcess::build(dim.get<int>(), hor.get<int>(), std::move(specs));
}

Json process_to_json(const FilteredProcess& p) {
  Json nodes = Json::array();
  for (const NodeSpec& s : p.to_specs()) {
    Json n;
    n["id"] = s.id;
    n["t"] = s.t;
    n["value"] = s.value;
    n["prob"] = s.prob;
    n["parent"] = s.parent ? Json(*s.parent) : Json(nullptr);
    nodes.push_back(std::move(n));
  }
  return Json{{"dimension", p.dimension()}, {"horizon", p.horizon()}, {"nodes", std::move(nodes)}};
}

CostFunction cost_from_json(const Json& doc) {
  const std::string type = as_string(require(doc, "type", "cost"), "cost.type");
  if (type == "lp_sum") {
    const Json& p = require(doc, "p", "cost");
    if (!p.is_number_integer() || (p.get<int>() != 1 && p.get<int>() != 2))
      fail(ErrorCode::MalformedInput, "cost: lp_sum needs p in {1, 2}");
    return lp_sum(p.get<int>());
  }
  if (type == "terminal_indicator") {
    const double tol = doc.contains("tol") ? as_number(doc.at("tol"), "cost.tol") : kInputTol;
    return terminal_indicator(tol);
  }
  if (type == "constant") return constant_cost(as_number(require(doc, "value", "cost"), "cost.value"));
  if (type == "table") {
    std::map<std::vector<std::string>, double> entries;
    for (const Json& e : as_array(require(doc, "entries", "cost"), "cost.entries")) {
      std::vector<std::string> key;
      for (const Json& id : as_array(require(e, "paths", "cost entry"), "cost entry.paths"))
        key.push_back(as_string(id, "cost entry.paths"));
      const double c = as_number(require(e, "c", "cost entry"), "cost entry.c");
      if (!entries.emplace(std::move(key), c).second) fail(ErrorCode::MalformedInput, "cost: duplicate table entry");
    }
    return table_cost(std::move(entries));
  }
  fail(ErrorCode::MalformedInput, "cost: unknown type \"" + type + "\"");
}

Coupling coupling_from_json(const Json& doc, const std::vector<ProcessPtr>& marginals) {
  std::vector<CouplingEntry> entries;
  for (const Json& e : as_array(require(doc, "mass", "coupling"), "coupling.mass")) {
    CouplingEntry ce;
    ce.leaves = leaf_tuple(require(e, "paths", "coupling entry"), marginals, "coupling entry");
    ce.mass = as_number(require(e, "p", "coupling entry"), "coupling entry.p");
    if (ce.mass < -1e-12) fail(ErrorCode::MalformedInput, "coupling: negative mass");
    entries.push_back(std::move(ce));
  }
  return Coupling(marginals, std::move(entries));
}

Json coupling_to_json(const Coupling& pi, const std::vector<std::string>& marginal_refs) {
  Json mass = Json::array();
  for (const CouplingEntry& e : pi.entries()) {
    Json paths = Json::array();
    for (std::size_t i = 0; i < e.leaves.size(); ++i) paths.push_back(pi.marginals()[i]->leaf_id(e.leaves[i]));
    mass.push_back(Json{{"paths", std::move(paths)}, {"p", e.mass}});
  }
  return Json{{"marginals", marginal_refs}, {"mass", std::move(mass)}};
}

Event event_from_json(const Json& doc, const std::vector<ProcessPtr>& marginals) {
  Event e;
  for (const Json& t : as_array(require(doc, "tuples", "event"), "event.tuples"))
    e.insert(leaf_tuple(t, marginals, "event tuple"));
  return e;
}

Payoff payoff_from_json(const Json& doc, const std::vector<ProcessPtr>& marginals) {
  std::map<std::vector<std::string>, double> table;
  for (const Json& e : as_array(require(doc, "entries", "payoff"), "payoff.entries")) {
    const auto leaves = leaf_tuple(require(e, "paths", "payoff entry"), marginals, "payoff entry");
    std::vector<std::string> key;
    for (std::size_t i = 0; i < leaves.size(); ++i) key.push_back(marginals[i]->leaf_id(leaves[i]));
    const double xi = as_number(require(e, "xi", "payoff entry"), "payoff entry.xi");
    if (!table.emplace(std::move(key), xi).second) fail(ErrorCode::MalformedInput, "payoff: duplicate entry");
  }
  Payoff payoff{table_cost(std::move(table)), {}};
  if (doc.contains("bounds") && !doc.at("bounds").is_null()) {
    const Json& bounds = as_array(doc.at("bounds"), "payoff.bounds");
    if (bounds.size() != marginals.size()) fail(ErrorCode::MalformedInput, "payoff: one bounds table per marginal");
    for (std::size_t i = 0; i < marginals.size(); ++i) {
      if (!bounds[i].is_object()) fail(ErrorCode::MalformedInput, "payoff.bounds: expected objects keyed by leaf id");
      std::vector<double> l(marginals[i]->num_leaves());
      for (std::size_t leaf = 0; leaf < l.size(); ++leaf) {
        const std::string& id = marginals[i]->leaf_id(leaf);
        if (!bounds[i].contains(id))
          fail(ErrorCode::MalformedInput, "payoff.bounds[" + std::to_string(i) + "]: missing leaf \"" + id + "\"");
        l[leaf] = as_number(bounds[i].at(id), "payoff.bounds");
      }
      payoff.bounds.push_back(std::move(l));
    }
  }
  return payoff;
}

CandidateSupport support_from_json(const Json& doc) {
  CandidateSupport s;
  s.horizon = 0;
  s.dimension = 0;
  for (const Json& p : as_array(require(doc, "paths", "support"), "support.paths")) {
    CandidatePath c;
    c.id = as_string(require(p, "id", "candidate"), "candidate.id");
    for (const Json& step : as_array(require(p, "values", "candidate"), "candidate.values")) {
      std::vector<double> v;
      for (const Json& x : as_array(step, "candidate.values")) v.push_back(as_number(x, "candidate.values"));
      c.values.push_back(std::move(v));
    }
    if (s.paths.empty()) {
      s.horizon = static_cast<int>(c.values.size());
      s.dimension = c.values.empty() ? 0 : static_cast<int>(c.values.front().size());
    }
    s.paths.push_back(std::move(c));
  }
  validate_support(s);
  return s;
}

Json dual_to_json(const DualPotential& d) {
  const std::size_t n = d.marginals.size();
  Json parts = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const FilteredProcess& p = *d.marginals[i];
    Json part;
    Json initial = Json::object();
    if (i < d.initial.size())
      for (std::size_t k = 0; k < d.initial[i].size(); ++k) initial[p.id(p.position(1, k))] = d.initial[i][k];
    Json terminal = Json::object();
    if (i < d.terminal.size())
      for (std::size_t leaf = 0; leaf < d.terminal[i].size(); ++leaf) terminal[p.leaf_id(leaf)] = d.terminal[i][leaf];
    std::vector<const FilteredProcess*> owners{&p};
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) owners.push_back(d.marginals[j].get());
    Json comps = Json::array();
    if (i < d.compensators.size()) {
      for (std::size_t s = 0; s < d.compensators[i].size(); ++s) {
        Json rows = Json::array();
        for (const auto& [key, v] : d.compensators[i][s]) rows.push_back(Json{{"key", id_key(key, owners)}, {"f", v}});
        comps.push_back(Json{{"t", static_cast<int>(s) + 2}, {"entries", std::move(rows)}});
      }
    }
    part["initial"] = std::move(initial);
    part["terminal"] = std::move(terminal);
    part["compensators"] = std::move(comps);
    parts.push_back(std::move(part));
  }
  return Json{{"mode", std::string(mode_name(d.mode))}, {"value", d.value}, {"parts", std::move(parts)}};
}

Json strategy_to_json(const Strategy& s, const std::vector<ProcessPtr>& marginals) {
  std::vector<const FilteredProcess*> owners;
  for (const auto& m : marginals) owners.push_back(m.get());
  Json steps = Json::array();
  for (std::size_t t = 0; t < s.delta.size(); ++t) {
    Json rows = Json::array();
    for (const auto& [prefix, delta] : s.delta[t])
      rows.push_back(Json{{"prefix", id_key(prefix, owners)}, {"delta", delta}});
    steps.push_back(Json{{"t", static_cast<int>(t)}, {"entries", std::move(rows)}});
  }
  return Json{{"p0", s.p0}, {"x0", s.x0}, {"delta", std::move(steps)}};
}

Json certificate_to_json(const PolarCertificate& c, const std::vector<ProcessPtr>& marginals) {
  Json slices = Json::array();
  for (const PolarSlice& sl : c.slices) {
    const FilteredProcess& own = *marginals[sl.marginal];
    std::vector<const FilteredProcess*> owners{&own};
    for (std::size_t j = 0; j < marginals.size(); ++j)
      if (j != sl.marginal) owners.push_back(marginals[j].get());
    Json members = Json::array();
    for (std::size_t m : sl.members) members.push_back(sl.terminal ? own.leaf_id(m) : own.id(m));
    slices.push_back(Json{{"marginal", sl.marginal},
                          {"t", sl.t},
                          {"key", sl.terminal ? Json::array() : id_key(sl.key, owners)},
                          {"members", std::move(members)},
                          {"terminal", sl.terminal},
                          {"full", sl.full}});
  }
  return Json{{"mode", std::string(mode_name(c.mode))},
              {"ok", c.ok},
              {"threshold", c.threshold},
              {"witness", c.witness},
              {"slices", std::move(slices)}};
}

Json barycenter_dual_to_json(const BarycenterDual& d, const std::vector<ProcessPtr>& marginals,
                             const CandidateSupport& support) {
  Json parts = Json::array();
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const FilteredProcess& p = *marginals[i];
    Json f = Json::object();
    for (std::size_t k = 0; k < d.f[i].size(); ++k) f[p.id(p.position(1, k))] = d.f[i][k];
    Json g = Json::object();
    for (std::size_t a = 0; a < d.g[i].size(); ++a) g[support.paths[a].id] = d.g[i][a];
    Json comps = Json::array();
    for (std::size_t s = 0; s < d.compensators[i].size(); ++s) {
      Json rows = Json::array();
      for (const auto& [key, v] : d.compensators[i][s])
        rows.push_back(Json{{"node", p.id(key[0])}, {"candidate_class", key[1]}, {"f", v}});
      comps.push_back(Json{{"t", static_cast<int>(s) + 2}, {"entries", std::move(rows)}});
    }
    parts.push_back(Json{{"f", std::move(f)}, {"g", std::move(g)}, {"compensators", std::move(comps)}});
  }
  return Json{{"value", d.value}, {"parts", std::move(parts)}};
}

std::string dump(const Json& j) {
  std::string out;
  dump_into(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace adot::io
