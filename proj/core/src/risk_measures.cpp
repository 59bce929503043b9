#include "dynrisk/risk_measures.hpp"

#include <algorithm>
#include <cmath>

#include "check_util.hpp"
#include "dynrisk/errors.hpp"
#include "dynrisk/generators.hpp"
#include "dynrisk/indices.hpp"

namespace dynrisk {

using detail::num;

RiskMeasure RiskMeasure::from_states(std::string name, StateEvaluator eval) {
  return RiskMeasure(std::move(name), std::move(eval), nullptr);
}

RiskMeasure RiskMeasure::from_atoms(std::string name, AtomEvaluator eval) {
  return RiskMeasure(std::move(name), nullptr, std::move(eval));
}

StateVector RiskMeasure::operator()(const ScenarioTree& tree, int t,
                                    const AdaptedProcess& d) const {
  tree.require_time(t);
  if (states_) return states_(tree, t, d);
  return broadcast(tree, t, by_atom(tree, t, d));
}

SliceValues RiskMeasure::by_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d) const {
  tree.require_time(t);
  SliceValues out;
  out.reserve(tree.level_size(t));
  if (atoms_) {
    for (auto id : tree.nodes_at(t)) out.push_back(atoms_(tree, t, d, id));
    return out;
  }
  const auto states = states_(tree, t, d);
  for (auto id : tree.nodes_at(t)) out.push_back(states.at(tree.node(id).leaf_begin));
  return out;
}

double RiskMeasure::at_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d,
                            NodeId atom) const {
  if (atoms_) return atoms_(tree, t, d, atom);
  return states_(tree, t, d).at(tree.node(atom).leaf_begin);
}

SliceValues eval_dcrm_from_sets(const ScenarioTree& tree, const MeasureSetSequence& seq,
                                const AdaptedProcess& d, int t) {
  tree.require_time(t);
  if (d.size() != tree.node_count()) throw InputError("process does not match the tree");
  auto out = robust_conditional_expectation(tree, seq.at(t), cumulative_from(tree, d, t), t);
  for (auto& v : out) v = -v;
  return out;
}

double eval_dcrm_from_sets_at(const ScenarioTree& tree, const MeasureSetSequence& seq,
                              const AdaptedProcess& d, NodeId atom) {
  if (d.size() != tree.node_count()) throw InputError("process does not match the tree");
  const int t = tree.node(atom).time;
  return -robust_conditional_expectation_at(tree, seq.at(t), cumulative_from(tree, d, t), atom);
}

RiskMeasure dcrm_from_sets(SequenceFactory sequence, std::string name) {
  return RiskMeasure::from_atoms(
      std::move(name), [sequence = std::move(sequence)](const ScenarioTree& tree, int,
                                                        const AdaptedProcess& d, NodeId atom) {
        const auto seq = sequence(tree);
        validate_sequence(tree, seq);
        return eval_dcrm_from_sets_at(tree, seq, d, atom);
      });
}

RiskMeasure dcrm_from_set(MeasureSet set, std::string name) {
  return dcrm_from_sets(
      [set = std::move(set)](const ScenarioTree& tree) {
        return MeasureSetSequence::constant(tree, set);
      },
      std::move(name));
}

RiskMeasure dcrm_from_index(const AcceptabilityIndex& index, double x, BisectionConfig config) {
  if (!(x > 0.0) || std::isinf(x)) throw InputError("level x must be in (0, inf)");
  return RiskMeasure::from_atoms(
      index.name() + "-dual", [index, x, config](const ScenarioTree& tree, int t,
                                                  const AdaptedProcess& d, NodeId atom) {
        double sup = 0.0;
        for (auto v : d.values()) sup = std::max(sup, std::abs(v));
        const double bound = 1.0 + sup * static_cast<double>(tree.horizon() + 1);
        const auto pred = [&](double c) {
          const auto shifted = d + AdaptedProcess::single_payment(tree, t, c);
          return index.at_atom(tree, t, shifted, atom).at_least(x);
        };
        double lo = -bound;
        double hi = bound;
        int doublings = 0;
        while (!pred(hi)) {
          if (++doublings > config.max_doublings) {
            throw NumericalError("index not normalized on this input: level " + num(x) +
                                 " not reached at t=" + std::to_string(t) + ", atom " +
                                 tree.node(atom).label);
          }
          lo = hi;
          hi *= 2.0;
        }
        doublings = 0;
        while (pred(lo)) {
          if (++doublings > config.max_doublings) {
            throw NumericalError("index not normalized on this input: level " + num(x) +
                                 " reached for every payment at t=" + std::to_string(t) +
                                 ", atom " + tree.node(atom).label);
          }
          hi = lo;
          lo *= 2.0;
        }
        while (hi - lo > config.tolerance) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          (pred(mid) ? hi : lo) = mid;
        }
        return hi;
      });
}

RiskFamily risk_family_from_sets(MeasureSetFamily family, std::string name) {
  RiskFamily out;
  out.name = name;
  out.member = [family = std::move(family), name](double x) {
    return dcrm_from_sets(
        [family, x](const ScenarioTree& tree) { return family(tree, x); }, name);
  };
  return out;
}

namespace {

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b)));
}

bool at_most(double a, double b, double tol) {
  return a <= b + tol * (1.0 + std::max(std::abs(a), std::abs(b)));
}

AdaptedProcess draw(const ScenarioTree& tree, const CheckOptions& options, std::size_t trial,
                    std::mt19937_64& rng) {
  if (trial < options.seed_processes.size()) {
    const auto& d = options.seed_processes[trial];
    if (d.size() != tree.node_count()) throw InputError("seed process does not match the tree");
    return d;
  }
  return random_process(tree, rng);
}

std::size_t total_trials(const CheckOptions& options) {
  return options.trials + options.seed_processes.size();
}

/// -rho_{t+1}(D) placed at time t+1, zero elsewhere.
AdaptedProcess recursion_process(const ScenarioTree& tree, const SliceValues& next, int t) {
  auto z = AdaptedProcess::zeros(tree);
  for (auto id : tree.nodes_at(t + 1)) z[id] = -next[tree.slot(id)];
  return z;
}

}  // namespace

AxiomReport check_axioms_A(const ScenarioTree& tree, const RiskMeasure& rm,
                           const CheckOptions& options) {
  AxiomReport report;
  auto& a1 = report.add("A1");
  auto& a2 = report.add("A2");
  auto& a3 = report.add("A3");
  auto& a4 = report.add("A4");
  auto& a5 = report.add("A5");
  auto& a6 = report.add("A6");
  auto& a7 = report.add("A7");
  const double tol = options.tolerance;
  const int T = tree.horizon();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> half(0.0, 1.0);

  for (std::size_t trial = 0; trial < total_trials(options); ++trial) {
    auto rng = seeded_rng(options.seed, trial);
    auto d = draw(tree, options, trial, rng);
    // Structured draws: every third random trial has no dividend at the pivot time.
    const bool zero_pivot = trial >= options.seed_processes.size() && trial % 3 == 2;
    for (int t = 0; t <= T; ++t) {
      if (zero_pivot) {
        for (auto id : tree.nodes_at(t)) d[id] = 0.0;
      }
      const auto base = rm.by_atom(tree, t, d);

      // A1: finite and constant on atoms.
      const auto states = rm(tree, t, d);
      a1.checked++;
      if (states.size() != tree.leaf_count()) {
        a1.fail("trial " + std::to_string(trial) + ": output has wrong size");
      } else {
        for (auto id : tree.nodes_at(t)) {
          const auto& n = tree.node(id);
          const double v0 = states[n.leaf_begin];
          for (auto leaf : tree.atom(id)) {
            if (!std::isfinite(states[leaf]) || !close(states[leaf], v0, tol)) {
              a1.fail(detail::trial_prefix(trial, t, tree, id) + "values " + num(v0) + " and " +
                      num(states[leaf]) + " on one atom");
              break;
            }
          }
        }
      }

      // A2: arbitrary changes outside the atom's future leave the atom alone.
      {
        const NodeId atom = detail::pick_atom(tree, t, rng);
        auto other = d;
        for (NodeId id = 0; id < tree.node_count(); ++id) {
          if (!detail::in_atom(tree, id, atom)) other[id] = unit(rng);
        }
        const double lhs = base[tree.slot(atom)];
        const double rhs = rm.at_atom(tree, t, other, atom);
        a2.checked++;
        if (!close(lhs, rhs, tol)) {
          a2.fail(detail::trial_prefix(trial, t, tree, atom) + "rho(D)=" + num(lhs) +
                  " but rho(D')=" + num(rhs) + " with equal future on the atom");
        }
      }

      // A3: D' = D + nonnegative noise from t on, arbitrary before t.
      {
        auto larger = d;
        for (NodeId id = 0; id < tree.node_count(); ++id) {
          const int s = tree.node(id).time;
          if (s < t) {
            larger[id] = unit(rng);
          } else if (half(rng) < 0.5) {
            larger[id] += half(rng);
          }
        }
        const auto vals = rm.by_atom(tree, t, larger);
        a3.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!at_most(vals[k], base[k], tol)) {
            a3.fail(detail::trial_prefix(trial, t, tree, id) + "rho(D+noise)=" + num(vals[k]) +
                    " > rho(D)=" + num(base[k]));
            break;
          }
        }
      }

      // A4: positive homogeneity.
      {
        const double lambda = std::exp(2.0 * unit(rng));
        const auto vals = rm.by_atom(tree, t, d.scaled(lambda));
        a4.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!close(vals[k], lambda * base[k], tol)) {
            a4.fail(detail::trial_prefix(trial, t, tree, id) + "rho(" + num(lambda) +
                    " D)=" + num(vals[k]) + " but lambda rho(D)=" + num(lambda * base[k]));
            break;
          }
        }
      }

      // A5: subadditivity.
      {
        const auto other = random_process(tree, rng);
        const auto sum = rm.by_atom(tree, t, d + other);
        const auto second = rm.by_atom(tree, t, other);
        a5.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!at_most(sum[k], base[k] + second[k], tol)) {
            a5.fail(detail::trial_prefix(trial, t, tree, id) + "rho(D+D')=" + num(sum[k]) +
                    " > " + num(base[k] + second[k]));
            break;
          }
        }
      }

      // A6: translation by an F_t-measurable payment at a random s >= t.
      {
        SliceValues m(tree.level_size(t));
        for (auto& v : m) v = 2.0 * unit(rng);
        std::uniform_int_distribution<int> pick_s(t, T);
        const int s = pick_s(rng);
        const auto vals = rm.by_atom(tree, t, d.plus_payment(tree, t, m, s));
        a6.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!close(vals[k], base[k] - m[k], tol)) {
            a6.fail(detail::trial_prefix(trial, t, tree, id) + "s=" + std::to_string(s) +
                    ", rho(D+m1_s)=" + num(vals[k]) + " but rho(D)-m=" + num(base[k] - m[k]));
            break;
          }
        }
      }

      // A7: sandwich between tomorrow's extremes, shifted by today's dividend.
      if (t < T) {
        const auto next = rm.by_atom(tree, t + 1, d);
        a7.checked++;
        for (auto id : tree.nodes_at(t)) {
          double lo = HUGE_VAL;
          double hi = -HUGE_VAL;
          for (auto c : tree.node(id).children) {
            lo = std::min(lo, next[tree.slot(c)]);
            hi = std::max(hi, next[tree.slot(c)]);
          }
          const double v = base[tree.slot(id)];
          if (!at_most(lo - d[id], v, tol) || !at_most(v, hi - d[id], tol)) {
            a7.fail(detail::trial_prefix(trial, t, tree, id) + "rho_t=" + num(v) +
                    " outside [" + num(lo - d[id]) + ", " + num(hi - d[id]) + "]");
            break;
          }
        }
      }
    }
  }
  return report;
}

AxiomReport check_axioms_A(const ScenarioTree& tree, const RiskMeasure& rm, std::size_t trials,
                           std::uint64_t seed) {
  CheckOptions options;
  options.trials = trials;
  options.seed = seed;
  return check_axioms_A(tree, rm, options);
}

VariantReport check_A7_variants(const ScenarioTree& tree, const RiskMeasure& rm,
                                const CheckOptions& options) {
  VariantReport report;
  auto& v1 = report.add("A7-I");
  auto& v2 = report.add("A7-II");
  auto& v3 = report.add("A7-III");
  auto& v4 = report.add("A7-IV");
  auto& v5 = report.add("A7-V");
  const double tol = options.tolerance;
  const int T = tree.horizon();
  std::uniform_real_distribution<double> half(0.0, 0.5);

  for (std::size_t trial = 0; trial < total_trials(options); ++trial) {
    auto rng = seeded_rng(options.seed, trial);
    const auto d = draw(tree, options, trial, rng);
    for (int t = 0; t < T; ++t) {
      const auto base = rm.by_atom(tree, t, d);
      const auto next = rm.by_atom(tree, t + 1, d);

      // A7-I: same dividend today and same value tomorrow, built by shifting an
      // unrelated process at t+1 onto D's t+1 values.
      {
        auto other = random_process(tree, rng);
        for (auto id : tree.nodes_at(t)) other[id] = d[id];
        const auto other_next = rm.by_atom(tree, t + 1, other);
        SliceValues shift(other_next.size());
        for (std::size_t k = 0; k < shift.size(); ++k) shift[k] = other_next[k] - next[k];
        other = other.plus_payment(tree, t + 1, shift, t + 1);
        const auto check_next = rm.by_atom(tree, t + 1, other);
        bool hypothesis = true;
        for (std::size_t k = 0; k < next.size(); ++k) {
          hypothesis = hypothesis && close(check_next[k], next[k], tol);
        }
        if (!hypothesis) {
          v1.skipped++;
        } else {
          v1.checked++;
          const auto vals = rm.by_atom(tree, t, other);
          for (auto id : tree.nodes_at(t)) {
            const auto k = tree.slot(id);
            if (!close(vals[k], base[k], tol)) {
              v1.fail(detail::trial_prefix(trial, t, tree, id) + "rho_t(D)=" + num(base[k]) +
                      " but rho_t(D')=" + num(vals[k]));
              break;
            }
          }
        }
      }

      // A7-II..IV: recursion through -rho_{t+1}(D) 1_{t+1}.
      {
        const auto rec = rm.by_atom(tree, t, recursion_process(tree, next, t));
        v2.checked++;
        v3.checked++;
        v4.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          const double rhs = rec[k] - d[id];
          const auto where = detail::trial_prefix(trial, t, tree, id) + "rho_t(D)=" + num(base[k]) +
                             ", recursion " + num(rhs);
          if (!close(base[k], rhs, tol)) v2.fail(where);
          if (!at_most(base[k], rhs, tol)) v3.fail(where);
          if (!at_most(rhs, base[k], tol)) v4.fail(where);
        }
      }

      // A7-V: no dividend today and tomorrow's risk nonpositive.
      {
        auto e = d;
        for (auto id : tree.nodes_at(t)) e[id] = 0.0;
        auto e_next = rm.by_atom(tree, t + 1, e);
        SliceValues shift(e_next.size());
        for (auto& s : shift) s = half(rng);
        for (std::size_t k = 0; k < shift.size(); ++k) shift[k] += e_next[k];
        e = e.plus_payment(tree, t + 1, shift, t + 1);
        e_next = rm.by_atom(tree, t + 1, e);
        if (std::any_of(e_next.begin(), e_next.end(), [](double v) { return v > 0.0; })) {
          v5.skipped++;
        } else {
          v5.checked++;
          const auto vals = rm.by_atom(tree, t, e);
          for (auto id : tree.nodes_at(t)) {
            const auto k = tree.slot(id);
            if (!at_most(vals[k], 0.0, tol)) {
              v5.fail(detail::trial_prefix(trial, t, tree, id) + "rho_t=" + num(vals[k]) +
                      " > 0 although rho_{t+1} <= 0 and D_t = 0");
              break;
            }
          }
        }
      }
    }
  }
  return report;
}

VariantReport check_A7_variants(const ScenarioTree& tree, const RiskMeasure& rm,
                                std::size_t trials, std::uint64_t seed) {
  CheckOptions options;
  options.trials = trials;
  options.seed = seed;
  return check_A7_variants(tree, rm, options);
}

}  // namespace dynrisk
