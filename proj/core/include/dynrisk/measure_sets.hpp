#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dynrisk/scenario_tree.hpp"

namespace dynrisk {

namespace sets {

/// {Q}.
struct Singleton {
  StateVector q;
};

/// All measures equivalent to the reference measure (all full-support measures).
struct FullSupport {};

/// Convex hull of finitely many probabilities on the leaves.
struct ExtremePoints {
  std::vector<StateVector> vertices;
};

/// Q^{a,u}: E_P[dQ/dP | F_t] <= a E_P[dQ/dP | F_{t-1}] for every t.
struct CapUpper {
  double a = 1.0;
};

/// Q^{a,l}: E_Q[dP/dQ | F_t] <= a E_Q[dP/dQ | F_{t-1}] for every t.
struct CapLower {
  double a = 1.0;
};

/// Every probability on the leaves except one full-support measure.
struct ExcludeOne {
  StateVector excluded;
};

}  // namespace sets

using MeasureSet = std::variant<sets::Singleton, sets::FullSupport, sets::ExtremePoints,
                                sets::CapUpper, sets::CapLower, sets::ExcludeOne>;

/// One set per time 0..T.
struct MeasureSetSequence {
  std::vector<MeasureSet> sets;

  static MeasureSetSequence constant(const ScenarioTree& tree, const MeasureSet& set);
  const MeasureSet& at(int t) const { return sets.at(static_cast<std::size_t>(t)); }
};

std::string kind_name(const MeasureSet& set);

/// Throws InputError when the set is not well formed for this tree.
void validate_measure_set(const ScenarioTree& tree, const MeasureSet& set);
void validate_sequence(const ScenarioTree& tree, const MeasureSetSequence& seq);

/// inf over the (closure of the) set of E_Q[X | F_t], one value per time-t node.
SliceValues robust_conditional_expectation(const ScenarioTree& tree, const MeasureSet& set,
                                           std::span<const double> x, int t);

/// Same infimum restricted to one atom.
double robust_conditional_expectation_at(const ScenarioTree& tree, const MeasureSet& set,
                                         std::span<const double> x, NodeId node);

/// Membership of a probability Q (leaf-indexed) in the set.
bool is_member(const ScenarioTree& tree, std::span<const double> q, const MeasureSet& set,
               double tolerance = 1e-12);

/// Draws a member of a CapUpper/CapLower/FullSupport/Singleton/ExtremePoints set.
/// Cap members are built from random one-step conditional probabilities,
/// half of them pushed onto the boundary of the cap constraints.
StateVector sample_member(const ScenarioTree& tree, const MeasureSet& set, std::mt19937_64& rng);

/// E_P[dQ/dP | atom] = Q(atom)/P(atom) for every node.
std::vector<double> density_process(const ScenarioTree& tree, std::span<const double> q);

struct ConsistencyViolation {
  StateVector x;
  int t = 0;
  std::string atom;
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  std::string condition;
};

struct ConsistencyReport {
  bool passed = true;
  std::size_t evaluations = 0;
  std::optional<ConsistencyViolation> violation;
};

/// Terminal variables used by the consistency checkers: every leaf indicator,
/// the constants +1 and -1, then `trials` draws of i.i.d. uniform [-1, 1].
std::vector<StateVector> probe_variables(const ScenarioTree& tree, std::size_t trials,
                                         std::uint64_t seed);

ConsistencyReport check_dynamic_consistency(const ScenarioTree& tree,
                                            const MeasureSetSequence& seq, std::size_t trials,
                                            std::uint64_t seed, double tolerance = 1e-9);

ConsistencyReport check_strong_consistency(const ScenarioTree& tree, const MeasureSet& set,
                                           std::size_t trials, std::uint64_t seed,
                                           double tolerance = 1e-9);

/// One-sided consistency: max over an atom of tomorrow's robust value bounds
/// today's from above. Also verifies the lower bound that every set satisfies.
ConsistencyReport check_weak_consistency(const ScenarioTree& tree, const MeasureSet& set,
                                         std::size_t trials, std::uint64_t seed,
                                         double tolerance = 1e-9);

}  // namespace dynrisk
