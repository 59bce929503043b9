#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "dynrisk/level.hpp"
#include "dynrisk/measure_sets.hpp"
#include "dynrisk/report.hpp"
#include "dynrisk/risk_measures.hpp"
#include "dynrisk/scenario_tree.hpp"

namespace dynrisk {

/// Per time-t node, aligned with nodes_at(t).
using SliceLevels = std::vector<Level>;

/// A dynamic acceptability index (t, D) -> alpha_t(D, omega) in [0, +inf],
/// returned per leaf.
class AcceptabilityIndex {
 public:
  using StateEvaluator =
      std::function<LevelVector(const ScenarioTree&, int, const AdaptedProcess&)>;
  using AtomEvaluator =
      std::function<Level(const ScenarioTree&, int, const AdaptedProcess&, NodeId)>;

  static AcceptabilityIndex from_states(std::string name, StateEvaluator eval);
  static AcceptabilityIndex from_atoms(std::string name, AtomEvaluator eval);

  const std::string& name() const { return name_; }

  LevelVector operator()(const ScenarioTree& tree, int t, const AdaptedProcess& d) const;
  SliceLevels by_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d) const;
  Level at_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d, NodeId atom) const;

 private:
  AcceptabilityIndex(std::string name, StateEvaluator states, AtomEvaluator atoms)
      : name_(std::move(name)), states_(std::move(states)), atoms_(std::move(atoms)) {}

  std::string name_;
  StateEvaluator states_;
  AtomEvaluator atoms_;
};

/// Either a risk family x -> rho^x or a family of measure-set sequences x -> U^x.
using IndexFamilyBacking = std::variant<RiskFamily, MeasureSetFamily>;

struct LevelSearch {
  double x_max = 1e6;     // predicate true here means +inf
  double x_min = 1e-12;   // predicate false here means 0 (sup of the empty set)
  double rel_tol = 1e-8;  // bisection stops once hi - lo <= rel_tol * hi
};

constexpr double kLevelCap = 1e6;

/// alpha_t(D) = sup{x > 0 : rho^x_t(D) <= 0}, one level per time-t node.
SliceLevels index_from_family(const ScenarioTree& tree, const IndexFamilyBacking& backing,
                              const AdaptedProcess& d, int t, const LevelSearch& search = {});
Level index_from_family_at(const ScenarioTree& tree, const IndexFamilyBacking& backing,
                           const AdaptedProcess& d, NodeId atom,
                           const LevelSearch& search = {});
AcceptabilityIndex family_index(IndexFamilyBacking backing, const LevelSearch& search = {},
                                std::string name = "family-index");

/// E[sum D_s | F_t] / E[(sum D_s)^- | F_t] under the reference measure; 0 when
/// the numerator is not positive, +inf when the denominator vanishes.
SliceLevels dglr(const ScenarioTree& tree, const AdaptedProcess& d, int t);
Level dglr_at(const ScenarioTree& tree, const AdaptedProcess& d, NodeId atom);
AcceptabilityIndex dglr_index();

/// E[sum D_s | F_t] / (-inf_Q E_Q[sum D_s | F_t]); 0 when the expectation is
/// not positive, +inf when the robust infimum is nonnegative.
SliceLevels draroc(const ScenarioTree& tree, const AdaptedProcess& d, int t,
                   const MeasureSet& set = sets::FullSupport{});
Level draroc_at(const ScenarioTree& tree, const AdaptedProcess& d, NodeId atom,
                const MeasureSet& set = sets::FullSupport{});
AcceptabilityIndex draroc_index(MeasureSet set = sets::FullSupport{});

enum class LimitDirection { upper, lower };

using LevelMap = std::function<double(double)>;

/// Backing x -> constant sequence of CapUpper/CapLower(1 + h(x)).
MeasureSetFamily limit_family(LimitDirection direction, LevelMap h = {});

SliceLevels limit_ratio(const ScenarioTree& tree, const AdaptedProcess& d, int t,
                        LimitDirection direction, LevelMap h = {},
                        const LevelSearch& search = {});
AcceptabilityIndex limit_ratio_index(LimitDirection direction, LevelMap h = {},
                                     const LevelSearch& search = {});

struct IndexCheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;  // relative, on levels
  std::vector<AdaptedProcess> seed_processes;
};

/// Randomized verification of (D1)-(D7). (D7) requires at least 30% of the
/// draws to satisfy its hypothesis.
AxiomReport check_axioms_D(const ScenarioTree& tree, const AcceptabilityIndex& index,
                           const IndexCheckOptions& options);
AxiomReport check_axioms_D(const ScenarioTree& tree, const AcceptabilityIndex& index,
                           std::size_t trials, std::uint64_t seed);

/// (D7-I), (D7-II), (D3-I), (D7-III).
VariantReport check_D_variants(const ScenarioTree& tree, const AcceptabilityIndex& index,
                               const IndexCheckOptions& options);
VariantReport check_D_variants(const ScenarioTree& tree, const AcceptabilityIndex& index,
                               std::size_t trials, std::uint64_t seed);

struct CounterexampleSearch {
  std::uint64_t seed = 0;
  int min_depth = 2;
  int max_depth = 3;
  std::size_t branching = 2;
  double value_lo = -1.0;
  double value_hi = 1.0;
  unsigned workers = 1;
};

struct ChildLevel {
  NodeId node = 0;
  Level level;
};

struct CounterexampleFixture {
  std::string index;
  std::uint64_t seed = 0;
  std::size_t candidate = 0;
  ScenarioTree tree;
  AdaptedProcess d;
  int t = 0;
  NodeId atom = 0;
  double payment = 0.0;
  Level level;
  std::vector<ChildLevel> children;
};

struct CounterexampleResult {
  std::size_t examined = 0;
  std::optional<CounterexampleFixture> fixture;
  bool found() const { return fixture.has_value(); }
};

/// Looks for an atom where D_t > 0 yet alpha_t is strictly below every child's
/// alpha_{t+1}. Candidate i is generated from (seed, i) alone; the lowest
/// witnessing candidate is returned regardless of the worker count.
CounterexampleResult find_d7_counterexample(const AcceptabilityIndex& index,
                                            const CounterexampleSearch& config,
                                            std::size_t budget);

/// The witness predicate used by the search, exposed for fixture replay.
std::optional<CounterexampleFixture> d7_witness(const ScenarioTree& tree,
                                                const AdaptedProcess& d,
                                                const AcceptabilityIndex& index);

}  // namespace dynrisk
