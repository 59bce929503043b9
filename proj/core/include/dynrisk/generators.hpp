#pragma once

#include <cstddef>
#include <random>

#include "dynrisk/scenario_tree.hpp"

namespace dynrisk {

struct TreeShape {
  int min_depth = 1;
  int max_depth = 3;
  std::size_t min_branching = 2;
  std::size_t max_branching = 3;
  std::size_t max_leaves = 64;
  bool uniform_probabilities = false;
};

/// Random tree: depth uniform in [min_depth, max_depth], each internal node
/// with branching uniform in [min_branching, max_branching], resampled until
/// the leaf count fits. Leaf probabilities are normalized exponential draws.
ScenarioTree random_tree(std::mt19937_64& rng, const TreeShape& shape = {});

/// i.i.d. uniform [lo, hi] node values.
AdaptedProcess random_process(const ScenarioTree& tree, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0);

StateVector random_terminal(const ScenarioTree& tree, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0);

/// Full-support probability on the leaves.
StateVector random_probability(const ScenarioTree& tree, std::mt19937_64& rng);

/// Deterministic per-(seed, stream) generator.
std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace dynrisk
