#pragma once

#include <cmath>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adot/process.hpp"

namespace th {

inline adot::NodeSpec node(std::string id, int t, double value, double prob, std::optional<std::string> parent = {}) {
  return adot::NodeSpec{std::move(id), t, {value}, prob, std::move(parent)};
}

inline adot::ProcessPtr tree(int horizon, std::vector<adot::NodeSpec> nodes, int dimension = 1) {
  return adot::FilteredProcess::build(dimension, horizon, std::move(nodes));
}

// mu: paths (1, 1), (-1, -1); nu: paths (0, 1), (0, -1); all with mass 1/2
inline adot::ProcessPtr gap_mu() {
  return tree(2, {node("u", 1, 1, .5), node("d", 1, -1, .5), node("uu", 2, 1, 1, "u"), node("dd", 2, -1, 1, "d")});
}
inline adot::ProcessPtr gap_nu() {
  return tree(2, {node("r", 1, 0, 1), node("ru", 2, 1, .5, "r"), node("rd", 2, -1, .5, "r")});
}

// root 0 with children +a / -a at probability 1/2
inline adot::ProcessPtr binomial(double a, const std::string& p = "b") {
  return tree(2, {node(p, 1, 0, 1), node(p + "+", 2, a, .5, p), node(p + "-", 2, -a, .5, p)});
}

inline adot::ProcessPtr dirac(std::initializer_list<double> path, const std::string& p = "z") {
  std::vector<adot::NodeSpec> nodes;
  int t = 0;
  std::optional<std::string> parent;
  for (double v : path) {
    ++t;
    std::string id = p + std::to_string(t);
    nodes.push_back(node(id, t, v, 1.0, parent));
    parent = id;
  }
  return tree(t, std::move(nodes));
}

// |x_T - y_T| on the last coordinate of two paths
inline double terminal_gap(std::span<const adot::PathRef> p) {
  return std::abs(p[0].values.back()[0] - p[1].values.back()[0]);
}

}  // namespace th
