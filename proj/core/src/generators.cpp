#include "dynrisk/generators.hpp"

#include <algorithm>

#include "dynrisk/errors.hpp"

namespace dynrisk {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

ScenarioTree random_tree(std::mt19937_64& rng, const TreeShape& shape) {
  if (shape.min_depth < 1 || shape.max_depth < shape.min_depth || shape.min_branching < 1 ||
      shape.max_branching < shape.min_branching) {
    throw InputError("invalid tree shape");
  }
  std::uniform_int_distribution<int> depth_dist(shape.min_depth, shape.max_depth);
  std::uniform_int_distribution<std::size_t> branch_dist(shape.min_branching,
                                                         shape.max_branching);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int depth = depth_dist(rng);
    std::vector<std::size_t> counts;
    std::size_t level = 1;
    bool too_big = false;
    for (int t = 0; t < depth && !too_big; ++t) {
      std::size_t next = 0;
      for (std::size_t i = 0; i < level; ++i) {
        const auto b = branch_dist(rng);
        counts.push_back(b);
        next += b;
      }
      level = next;
      too_big = level > shape.max_leaves;
    }
    if (too_big) continue;
    StateVector p(level);
    if (shape.uniform_probabilities) {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(level));
    } else {
      std::exponential_distribution<double> e(1.0);
      double total = 0.0;
      for (auto& v : p) {
        v = 0.05 + e(rng);
        total += v;
      }
      for (auto& v : p) v /= total;
    }
    return ScenarioTree::from_child_counts(counts, p);
  }
  throw InputError("tree shape admits no tree within the leaf limit");
}

AdaptedProcess random_process(const ScenarioTree& tree, std::mt19937_64& rng, double lo,
                              double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(tree.node_count());
  for (auto& x : v) x = u(rng);
  return AdaptedProcess(std::move(v));
}

StateVector random_terminal(const ScenarioTree& tree, std::mt19937_64& rng, double lo,
                            double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  StateVector x(tree.leaf_count());
  for (auto& v : x) v = u(rng);
  return x;
}

StateVector random_probability(const ScenarioTree& tree, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  StateVector q(tree.leaf_count());
  double total = 0.0;
  for (auto& v : q) {
    v = 1e-3 + e(rng);
    total += v;
  }
  for (auto& v : q) v /= total;
  return q;
}

}  // namespace dynrisk
