#pragma once

// Shared helpers for the randomized axiom checkers.

#include <charconv>
#include <random>
#include <string>

#include "dynrisk/scenario_tree.hpp"

namespace dynrisk::detail {

inline std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline NodeId pick_atom(const ScenarioTree& tree, int t, std::mt19937_64& rng) {
  auto nodes = tree.nodes_at(t);
  std::uniform_int_distribution<std::size_t> pick(0, tree.level_size(t) - 1);
  return nodes[pick(rng)];
}

/// True when node lies in the subtree of atom (atom at time <= node time).
inline bool in_atom(const ScenarioTree& tree, NodeId node, NodeId atom) {
  const int t = tree.node(atom).time;
  return tree.node(node).time >= t && tree.ancestor_of_node(node, t) == atom;
}

inline std::string trial_prefix(std::size_t trial, int t, const ScenarioTree& tree, NodeId atom) {
  return "trial " + std::to_string(trial) + ", t=" + std::to_string(t) + ", atom " +
         tree.node(atom).label + ": ";
}

}  // namespace dynrisk::detail
