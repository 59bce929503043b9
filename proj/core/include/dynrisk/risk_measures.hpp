#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dynrisk/measure_sets.hpp"
#include "dynrisk/report.hpp"
#include "dynrisk/scenario_tree.hpp"

namespace dynrisk {

class AcceptabilityIndex;

/// A dynamic risk measure as an evaluator (t, D) -> rho_t(D, omega), returned
/// per leaf so that adaptedness is observable rather than assumed.
class RiskMeasure {
 public:
  using StateEvaluator =
      std::function<StateVector(const ScenarioTree&, int, const AdaptedProcess&)>;
  using AtomEvaluator =
      std::function<double(const ScenarioTree&, int, const AdaptedProcess&, NodeId)>;

  /// Black-box measure given on states.
  static RiskMeasure from_states(std::string name, StateEvaluator eval);
  /// Measure given per atom; states inherit the atom's value.
  static RiskMeasure from_atoms(std::string name, AtomEvaluator eval);

  const std::string& name() const { return name_; }

  StateVector operator()(const ScenarioTree& tree, int t, const AdaptedProcess& d) const;
  /// Value at the first leaf of every time-t atom.
  SliceValues by_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d) const;
  double at_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d, NodeId atom) const;

 private:
  RiskMeasure(std::string name, StateEvaluator states, AtomEvaluator atoms)
      : name_(std::move(name)), states_(std::move(states)), atoms_(std::move(atoms)) {}

  std::string name_;
  StateEvaluator states_;
  AtomEvaluator atoms_;
};

/// rho_t(D) = -inf_{Q in Q_t} E_Q[sum_{s>=t} D_s | F_t], one value per time-t node.
SliceValues eval_dcrm_from_sets(const ScenarioTree& tree, const MeasureSetSequence& seq,
                                const AdaptedProcess& d, int t);
double eval_dcrm_from_sets_at(const ScenarioTree& tree, const MeasureSetSequence& seq,
                              const AdaptedProcess& d, NodeId atom);

using SequenceFactory = std::function<MeasureSetSequence(const ScenarioTree&)>;

RiskMeasure dcrm_from_sets(SequenceFactory sequence, std::string name = "dcrm");
/// Constant sequence {set, ..., set}.
RiskMeasure dcrm_from_set(MeasureSet set, std::string name = "dcrm");

struct BisectionConfig {
  double tolerance = 1e-9;
  int max_doublings = 60;
};

/// rho^x_t(D) = inf{c : alpha_t(D + c 1_{t}) >= x}, by bracket expansion and
/// bisection on c separately for every atom. Throws NumericalError when the
/// bracket cannot be established (index not normalized on this input).
RiskMeasure dcrm_from_index(const AcceptabilityIndex& index, double x,
                            BisectionConfig config = {});

/// An increasing family x -> rho^x.
struct RiskFamily {
  std::string name;
  std::function<RiskMeasure(double)> member;
};

/// x -> dcrm of the measure-set sequence produced for x.
using MeasureSetFamily = std::function<MeasureSetSequence(const ScenarioTree&, double)>;
RiskFamily risk_family_from_sets(MeasureSetFamily family, std::string name = "set-family");

struct CheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-7;
  /// Extra processes tried before the random draws.
  std::vector<AdaptedProcess> seed_processes;
};

/// Randomized verification of (A1)-(A7).
AxiomReport check_axioms_A(const ScenarioTree& tree, const RiskMeasure& rm,
                           const CheckOptions& options);
AxiomReport check_axioms_A(const ScenarioTree& tree, const RiskMeasure& rm, std::size_t trials,
                           std::uint64_t seed);

/// Randomized verification of (A7-I)-(A7-V).
VariantReport check_A7_variants(const ScenarioTree& tree, const RiskMeasure& rm,
                                const CheckOptions& options);
VariantReport check_A7_variants(const ScenarioTree& tree, const RiskMeasure& rm,
                                std::size_t trials, std::uint64_t seed);

}  // namespace dynrisk
