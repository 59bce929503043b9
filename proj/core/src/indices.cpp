#include "dynrisk/indices.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "check_util.hpp"
#include "dynrisk/errors.hpp"
#include "dynrisk/generators.hpp"

namespace dynrisk {

using detail::num;

AcceptabilityIndex AcceptabilityIndex::from_states(std::string name, StateEvaluator eval) {
  return AcceptabilityIndex(std::move(name), std::move(eval), nullptr);
}

AcceptabilityIndex AcceptabilityIndex::from_atoms(std::string name, AtomEvaluator eval) {
  return AcceptabilityIndex(std::move(name), nullptr, std::move(eval));
}

LevelVector AcceptabilityIndex::operator()(const ScenarioTree& tree, int t,
                                           const AdaptedProcess& d) const {
  tree.require_time(t);
  if (states_) return states_(tree, t, d);
  const auto slice = by_atom(tree, t, d);
  LevelVector out(tree.leaf_count());
  for (auto id : tree.nodes_at(t)) {
    for (auto leaf : tree.atom(id)) out[leaf] = slice[tree.slot(id)];
  }
  return out;
}

SliceLevels AcceptabilityIndex::by_atom(const ScenarioTree& tree, int t,
                                        const AdaptedProcess& d) const {
  tree.require_time(t);
  SliceLevels out;
  out.reserve(tree.level_size(t));
  if (atoms_) {
    for (auto id : tree.nodes_at(t)) out.push_back(atoms_(tree, t, d, id));
    return out;
  }
  const auto states = states_(tree, t, d);
  for (auto id : tree.nodes_at(t)) out.push_back(states.at(tree.node(id).leaf_begin));
  return out;
}

Level AcceptabilityIndex::at_atom(const ScenarioTree& tree, int t, const AdaptedProcess& d,
                                  NodeId atom) const {
  if (atoms_) return atoms_(tree, t, d, atom);
  return states_(tree, t, d).at(tree.node(atom).leaf_begin);
}

namespace {

void require_process(const ScenarioTree& tree, const AdaptedProcess& d) {
  if (d.size() != tree.node_count()) throw InputError("process does not match the tree");
  for (auto v : d.values()) {
    if (!std::isfinite(v)) throw InputError("process contains a non-finite value");
  }
}

/// E_P[X | atom] and E_P[X^- | atom] of the cumulative cash flow.
std::pair<double, double> mean_and_shortfall(const ScenarioTree& tree, std::span<const double> x,
                                             NodeId atom) {
  const auto p = tree.reference_probability();
  double mean = 0.0;
  double shortfall = 0.0;
  for (auto leaf : tree.atom(atom)) {
    mean += p[leaf] * x[leaf];
    shortfall += p[leaf] * std::max(-x[leaf], 0.0);
  }
  const double mass = tree.mass(atom);
  return {mean / mass, shortfall / mass};
}

}  // namespace

Level index_from_family_at(const ScenarioTree& tree, const IndexFamilyBacking& backing,
                           const AdaptedProcess& d, NodeId atom, const LevelSearch& search) {
  require_process(tree, d);
  const int t = tree.node(atom).time;
  std::function<bool(double)> accepted;
  StateVector cum;
  if (const auto* family = std::get_if<RiskFamily>(&backing)) {
    accepted = [&, family](double x) {
      return family->member(x).at_atom(tree, t, d, atom) <= 0.0;
    };
  } else {
    const auto* sets = &std::get<MeasureSetFamily>(backing);
    cum = cumulative_from(tree, d, t);
    accepted = [&, sets](double x) {
      const auto seq = (*sets)(tree, x);
      return robust_conditional_expectation_at(tree, seq.at(t), cum, atom) >= 0.0;
    };
  }
  if (accepted(search.x_max)) return Level::infinity();
  double lo = 0.0;
  double hi = 0.0;
  if (accepted(1.0)) {
    lo = 1.0;
    hi = 2.0;
    while (hi < search.x_max && accepted(hi)) {
      lo = hi;
      hi *= 2.0;
    }
    hi = std::min(hi, search.x_max);
  } else {
    hi = 1.0;
    lo = 0.5;
    while (!accepted(lo)) {
      hi = lo;
      lo *= 0.5;
      if (lo < search.x_min) return Level::zero();
    }
  }
  while (hi - lo > search.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (accepted(mid) ? lo : hi) = mid;
  }
  return Level::finite(0.5 * (lo + hi));
}

SliceLevels index_from_family(const ScenarioTree& tree, const IndexFamilyBacking& backing,
                              const AdaptedProcess& d, int t, const LevelSearch& search) {
  tree.require_time(t);
  SliceLevels out;
  for (auto id : tree.nodes_at(t)) out.push_back(index_from_family_at(tree, backing, d, id, search));
  return out;
}

AcceptabilityIndex family_index(IndexFamilyBacking backing, const LevelSearch& search,
                                std::string name) {
  return AcceptabilityIndex::from_atoms(
      std::move(name), [backing = std::move(backing), search](
                           const ScenarioTree& tree, int, const AdaptedProcess& d, NodeId atom) {
        return index_from_family_at(tree, backing, d, atom, search);
      });
}

Level dglr_at(const ScenarioTree& tree, const AdaptedProcess& d, NodeId atom) {
  require_process(tree, d);
  const auto cum = cumulative_from(tree, d, tree.node(atom).time);
  const auto [mean, shortfall] = mean_and_shortfall(tree, cum, atom);
  if (!(mean > 0.0)) return Level::zero();
  if (shortfall == 0.0) return Level::infinity();
  return Level::finite(mean / shortfall);
}

SliceLevels dglr(const ScenarioTree& tree, const AdaptedProcess& d, int t) {
  tree.require_time(t);
  SliceLevels out;
  for (auto id : tree.nodes_at(t)) out.push_back(dglr_at(tree, d, id));
  return out;
}

AcceptabilityIndex dglr_index() {
  return AcceptabilityIndex::from_atoms(
      "dglr", [](const ScenarioTree& tree, int, const AdaptedProcess& d, NodeId atom) {
        return dglr_at(tree, d, atom);
      });
}

Level draroc_at(const ScenarioTree& tree, const AdaptedProcess& d, NodeId atom,
                const MeasureSet& set) {
  require_process(tree, d);
  const auto cum = cumulative_from(tree, d, tree.node(atom).time);
  const double mean = mean_and_shortfall(tree, cum, atom).first;
  if (!(mean > 0.0)) return Level::zero();
  const double worst = robust_conditional_expectation_at(tree, set, cum, atom);
  if (worst >= 0.0) return Level::infinity();
  return Level::finite(mean / -worst);
}

SliceLevels draroc(const ScenarioTree& tree, const AdaptedProcess& d, int t,
                   const MeasureSet& set) {
  tree.require_time(t);
  validate_measure_set(tree, set);
  SliceLevels out;
  for (auto id : tree.nodes_at(t)) out.push_back(draroc_at(tree, d, id, set));
  return out;
}

AcceptabilityIndex draroc_index(MeasureSet set) {
  return AcceptabilityIndex::from_atoms(
      "draroc", [set = std::move(set)](const ScenarioTree& tree, int, const AdaptedProcess& d,
                                       NodeId atom) { return draroc_at(tree, d, atom, set); });
}

MeasureSetFamily limit_family(LimitDirection direction, LevelMap h) {
  if (!h) h = [](double x) { return x; };
  return [direction, h](const ScenarioTree& tree, double x) {
    const double g = h(x);
    if (!(g >= 0.0) || !std::isfinite(g)) throw InputError("level map must be finite and >= 0");
    const double a = 1.0 + g;
    const MeasureSet set = direction == LimitDirection::upper ? MeasureSet{sets::CapUpper{a}}
                                                              : MeasureSet{sets::CapLower{a}};
    return MeasureSetSequence::constant(tree, set);
  };
}

SliceLevels limit_ratio(const ScenarioTree& tree, const AdaptedProcess& d, int t,
                        LimitDirection direction, LevelMap h, const LevelSearch& search) {
  return index_from_family(tree, IndexFamilyBacking{limit_family(direction, std::move(h))}, d, t,
                           search);
}

AcceptabilityIndex limit_ratio_index(LimitDirection direction, LevelMap h,
                                     const LevelSearch& search) {
  return family_index(IndexFamilyBacking{limit_family(direction, std::move(h))}, search,
                      direction == LimitDirection::upper ? "upper-limit" : "lower-limit");
}

// ---------------------------------------------------------------------------
// Axiom checkers

namespace {

class LevelChecks {
 public:
  explicit LevelChecks(double tol) : tol_(tol) {}
  bool geq(const Level& a, const Level& b) const { return level_at_least(a, b, tol_); }
  bool eq(const Level& a, const Level& b) const { return level_close(a, b, tol_); }

 private:
  double tol_;
};

std::size_t total_trials(const IndexCheckOptions& options) {
  return options.trials + options.seed_processes.size();
}

bool seeded(const IndexCheckOptions& options, std::size_t trial) {
  return trial < options.seed_processes.size();
}

/// Random draws alternate between no drift, positive drift and negative drift
/// so that finite, zero and infinite levels all occur.
AdaptedProcess draw(const ScenarioTree& tree, const IndexCheckOptions& options, std::size_t trial,
                    std::mt19937_64& rng) {
  if (seeded(options, trial)) {
    const auto& d = options.seed_processes[trial];
    if (d.size() != tree.node_count()) throw InputError("seed process does not match the tree");
    return d;
  }
  switch (trial % 3) {
    case 1: return random_process(tree, rng, -0.6, 1.0);
    case 2: return random_process(tree, rng, -1.0, 0.6);
    default: return random_process(tree, rng);
  }
}

/// Companion process D' with D'_t <= 0: independent, dominated by D after t,
/// or strictly negative after t.
AdaptedProcess companion(const ScenarioTree& tree, const AdaptedProcess& d, int t, int mode,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> noise(0.0, 1.0);
  AdaptedProcess out;
  switch (mode) {
    case 0: out = random_process(tree, rng); break;
    case 1:
      out = d;
      for (NodeId id = 0; id < tree.node_count(); ++id) {
        if (tree.node(id).time > t) out[id] -= noise(rng);
      }
      break;
    default: out = random_process(tree, rng, -1.0, -0.1); break;
  }
  return out;
}

struct Sandwich {
  Level low;   // min over children of alpha_{t+1}(D)
  Level high;  // max over children of alpha_{t+1}(D')
  bool admissible = false;
};

Sandwich sandwich(const ScenarioTree& tree, NodeId atom, const SliceLevels& next,
                  const SliceLevels& next_other) {
  Sandwich s{Level::infinity(), Level::zero(), false};
  for (auto c : tree.node(atom).children) {
    s.low = std::min(s.low, next[tree.slot(c)], [](const Level& a, const Level& b) { return a < b; });
    s.high = std::max(s.high, next_other[tree.slot(c)],
                      [](const Level& a, const Level& b) { return a < b; });
  }
  s.admissible = !s.high.is_infinite() && s.low >= s.high;
  return s;
}

/// m used on the D side: tomorrow's minimum, or a finite stand-in above the
/// level cap when that minimum is +inf.
Level strongest_lower(const Sandwich& s) {
  if (!s.low.is_infinite()) return s.low;
  return Level::finite(std::max(s.high.value(), kLevelCap));
}

/// Evaluates the (D7) conclusion at one atom; returns an empty string on success.
std::string d7_conclusion(const LevelChecks& lc, const Sandwich& s, const Level& today,
                          const Level& today_other) {
  const Level m_low = strongest_lower(s);
  if (!lc.geq(today, m_low)) {
    return "alpha_t(D)=" + today.to_string() + " below m=" + m_low.to_string();
  }
  if (!lc.geq(s.high, today_other)) {
    return "alpha_t(D')=" + today_other.to_string() + " above m=" + s.high.to_string();
  }
  return {};
}

AdaptedProcess with_time_values(const ScenarioTree& tree, AdaptedProcess d, int t, int sign) {
  for (auto id : tree.nodes_at(t)) {
    d[id] = sign == 0 ? 0.0 : sign * std::abs(d[id]);
  }
  return d;
}

}  // namespace

AxiomReport check_axioms_D(const ScenarioTree& tree, const AcceptabilityIndex& index,
                           const IndexCheckOptions& options) {
  AxiomReport report;
  auto& d1 = report.add("D1");
  auto& d2 = report.add("D2");
  auto& d3 = report.add("D3");
  auto& d4 = report.add("D4");
  auto& d5 = report.add("D5");
  auto& d6 = report.add("D6");
  auto& d7 = report.add("D7", 0.3);
  const LevelChecks lc(options.tolerance);
  const int T = tree.horizon();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> noise(0.0, 1.0);
  const double lambdas[] = {0.0, 0.25, 0.5, 0.75, 1.0};

  for (std::size_t trial = 0; trial < total_trials(options); ++trial) {
    auto rng = seeded_rng(options.seed, trial);
    const auto d = draw(tree, options, trial, rng);
    for (int t = 0; t <= T; ++t) {
      const auto base = index.by_atom(tree, t, d);

      {
        const auto states = index(tree, t, d);
        d1.checked++;
        if (states.size() != tree.leaf_count()) {
          d1.fail("trial " + std::to_string(trial) + ": output has wrong size");
        } else {
          for (auto id : tree.nodes_at(t)) {
            const auto& first = states[tree.node(id).leaf_begin];
            for (auto leaf : tree.atom(id)) {
              if (!lc.eq(states[leaf], first)) {
                d1.fail(detail::trial_prefix(trial, t, tree, id) + "levels " + first.to_string() +
                        " and " + states[leaf].to_string() + " on one atom");
                break;
              }
            }
          }
        }
      }

      {
        const NodeId atom = detail::pick_atom(tree, t, rng);
        auto other = d;
        for (NodeId id = 0; id < tree.node_count(); ++id) {
          if (!detail::in_atom(tree, id, atom)) other[id] = unit(rng);
        }
        const auto a = base[tree.slot(atom)];
        const auto b = index.at_atom(tree, t, other, atom);
        d2.checked++;
        if (!lc.eq(a, b)) {
          d2.fail(detail::trial_prefix(trial, t, tree, atom) + "alpha(D)=" + a.to_string() +
                  " but alpha(D')=" + b.to_string() + " with equal future on the atom");
        }
      }

      {
        auto smaller = d;
        for (NodeId id = 0; id < tree.node_count(); ++id) {
          if (tree.node(id).time < t) {
            smaller[id] = unit(rng);
          } else if (noise(rng) < 0.5) {
            smaller[id] -= noise(rng);
          }
        }
        const auto vals = index.by_atom(tree, t, smaller);
        d3.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!lc.geq(base[k], vals[k])) {
            d3.fail(detail::trial_prefix(trial, t, tree, id) + "alpha(D)=" + base[k].to_string() +
                    " < alpha(D - noise)=" + vals[k].to_string());
            break;
          }
        }
      }

      {
        const double lambda = std::exp(2.0 * unit(rng));
        const auto vals = index.by_atom(tree, t, d.scaled(lambda));
        d4.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!lc.eq(base[k], vals[k])) {
            d4.fail(detail::trial_prefix(trial, t, tree, id) + "alpha(" + num(lambda) +
                    " D)=" + vals[k].to_string() + " but alpha(D)=" + base[k].to_string());
            break;
          }
        }
      }

      {
        const auto other = draw(tree, IndexCheckOptions{}, trial + 1, rng);
        const auto other_levels = index.by_atom(tree, t, other);
        bool any = false;
        for (double lambda : lambdas) {
          const auto mix = index.by_atom(tree, t, d.scaled(lambda) + other.scaled(1.0 - lambda));
          for (auto id : tree.nodes_at(t)) {
            const auto k = tree.slot(id);
            const Level x = std::min(base[k], other_levels[k],
                                     [](const Level& a, const Level& b) { return a < b; });
            if (x == Level::zero()) continue;
            any = true;
            if (!lc.geq(mix[k], x)) {
              d5.fail(detail::trial_prefix(trial, t, tree, id) + "lambda=" + num(lambda) +
                      ": alpha(mix)=" + mix[k].to_string() + " below " + x.to_string());
            }
          }
        }
        any ? d5.checked++ : d5.skipped++;
      }

      {
        SliceValues m(tree.level_size(t));
        for (auto& v : m) v = 2.0 * unit(rng);
        std::uniform_int_distribution<int> pick_s(t, T);
        const int s = pick_s(rng);
        const auto now = index.by_atom(tree, t, d.plus_payment(tree, t, m, t));
        const auto later = index.by_atom(tree, t, d.plus_payment(tree, t, m, s));
        d6.checked++;
        for (auto id : tree.nodes_at(t)) {
          const auto k = tree.slot(id);
          if (!lc.eq(now[k], later[k])) {
            d6.fail(detail::trial_prefix(trial, t, tree, id) + "s=" + std::to_string(s) +
                    ": alpha(D+m1_t)=" + now[k].to_string() +
                    " but alpha(D+m1_s)=" + later[k].to_string());
            break;
          }
        }
      }

      if (t < T) {
        const int mode = seeded(options, trial) ? 2 : static_cast<int>((trial / 3) % 4 % 3);
        const auto pos = with_time_values(tree, d, t, +1);
        const auto neg = with_time_values(tree, companion(tree, d, t, mode, rng), t, -1);
        const auto next = index.by_atom(tree, t + 1, pos);
        const auto next_other = index.by_atom(tree, t + 1, neg);
        std::vector<Sandwich> sw;
        bool admissible = true;
        for (auto id : tree.nodes_at(t)) {
          sw.push_back(sandwich(tree, id, next, next_other));
          admissible = admissible && sw.back().admissible;
        }
        if (!admissible) {
          d7.skipped++;
        } else {
          d7.checked++;
          const auto today = index.by_atom(tree, t, pos);
          const auto today_other = index.by_atom(tree, t, neg);
          for (auto id : tree.nodes_at(t)) {
            const auto k = tree.slot(id);
            const auto msg = d7_conclusion(lc, sw[k], today[k], today_other[k]);
            if (!msg.empty()) {
              d7.fail(detail::trial_prefix(trial, t, tree, id) + "D_t=" + num(pos[id]) + ", " +
                      msg);
              break;
            }
          }
        }
      }
    }
  }
  if (d7.effective_ratio() < d7.min_effective_ratio) {
    d7.fail("only " + num(d7.effective_ratio()) + " of the draws satisfied the hypothesis");
  }
  return report;
}

AxiomReport check_axioms_D(const ScenarioTree& tree, const AcceptabilityIndex& index,
                           std::size_t trials, std::uint64_t seed) {
  IndexCheckOptions options;
  options.trials = trials;
  options.seed = seed;
  return check_axioms_D(tree, index, options);
}

VariantReport check_D_variants(const ScenarioTree& tree, const AcceptabilityIndex& index,
                               const IndexCheckOptions& options) {
  VariantReport report;
  auto& v1 = report.add("D7-I", 0.3);
  auto& v2 = report.add("D7-II");
  auto& v3 = report.add("D3-I");
  auto& v4 = report.add("D7-III", 0.3);
  const LevelChecks lc(options.tolerance);
  const int T = tree.horizon();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> noise(0.0, 1.0);

  for (std::size_t trial = 0; trial < total_trials(options); ++trial) {
    auto rng = seeded_rng(options.seed, trial);
    const auto d = draw(tree, options, trial, rng);
    const int mode = seeded(options, trial) ? 2 : static_cast<int>((trial / 3) % 4 % 3);
    for (int t = 0; t <= T; ++t) {
      // D3-I: dominance on one atom only.
      {
        const NodeId atom = detail::pick_atom(tree, t, rng);
        auto smaller = d;
        for (NodeId id = 0; id < tree.node_count(); ++id) {
          if (!detail::in_atom(tree, id, atom)) {
            smaller[id] = unit(rng);
          } else if (noise(rng) < 0.5) {
            smaller[id] -= noise(rng);
          }
        }
        const auto a = index.at_atom(tree, t, d, atom);
        const auto b = index.at_atom(tree, t, smaller, atom);
        v3.checked++;
        if (!lc.geq(a, b)) {
          v3.fail(detail::trial_prefix(trial, t, tree, atom) + "alpha(D)=" + a.to_string() +
                  " < alpha(D')=" + b.to_string() + " with D >= D' on the atom");
        }
      }
      if (t == T) continue;

      // D7-I: no dividends today on either side.
      {
        const auto pos = with_time_values(tree, d, t, 0);
        const auto neg = with_time_values(tree, companion(tree, d, t, mode, rng), t, 0);
        const auto next = index.by_atom(tree, t + 1, pos);
        const auto next_other = index.by_atom(tree, t + 1, neg);
        std::vector<Sandwich> sw;
        bool admissible = true;
        for (auto id : tree.nodes_at(t)) {
          sw.push_back(sandwich(tree, id, next, next_other));
          admissible = admissible && sw.back().admissible;
        }
        if (!admissible) {
          v1.skipped++;
        } else {
          v1.checked++;
          const auto today = index.by_atom(tree, t, pos);
          const auto today_other = index.by_atom(tree, t, neg);
          for (auto id : tree.nodes_at(t)) {
            const auto k = tree.slot(id);
            const auto msg = d7_conclusion(lc, sw[k], today[k], today_other[k]);
            if (!msg.empty()) {
              v1.fail(detail::trial_prefix(trial, t, tree, id) + msg);
              break;
            }
          }
        }
      }

      // D7-II: today's dividend moved to t+1, then today between tomorrow's extremes.
      {
        auto e = d;
        for (auto id : tree.nodes_at(t + 1)) e[id] += d[*tree.node(id).parent];
        e = with_time_values(tree, e, t, 0);
        const auto today = index.by_atom(tree, t, e);
        const auto next = index.by_atom(tree, t + 1, e);
        v2.checked++;
        for (auto id : tree.nodes_at(t)) {
          Level lo = Level::infinity();
          Level hi = Level::zero();
          for (auto c : tree.node(id).children) {
            const auto& l = next[tree.slot(c)];
            if (l < lo) lo = l;
            if (hi < l) hi = l;
          }
          const auto& v = today[tree.slot(id)];
          if (!lc.geq(v, lo) || !lc.geq(hi, v)) {
            v2.fail(detail::trial_prefix(trial, t, tree, id) + "alpha_t=" + v.to_string() +
                    " outside [" + lo.to_string() + ", " + hi.to_string() + "]");
            break;
          }
        }
      }

      // D7-III: the (D7) hypothesis on a single atom.
      {
        const NodeId atom = detail::pick_atom(tree, t, rng);
        auto pos = d;
        pos[atom] = std::abs(pos[atom]);
        auto neg = companion(tree, d, t, mode, rng);
        neg[atom] = -std::abs(neg[atom]);
        const auto next = index.by_atom(tree, t + 1, pos);
        const auto next_other = index.by_atom(tree, t + 1, neg);
        const auto sw = sandwich(tree, atom, next, next_other);
        if (!sw.admissible) {
          v4.skipped++;
        } else {
          v4.checked++;
          const auto msg = d7_conclusion(lc, sw, index.at_atom(tree, t, pos, atom),
                                         index.at_atom(tree, t, neg, atom));
          if (!msg.empty()) v4.fail(detail::trial_prefix(trial, t, tree, atom) + msg);
        }
      }
    }
  }
  for (auto* r : {&v1, &v4}) {
    if (r->effective_ratio() < r->min_effective_ratio) {
      r->fail("only " + num(r->effective_ratio()) + " of the draws satisfied the hypothesis");
    }
  }
  return report;
}

VariantReport check_D_variants(const ScenarioTree& tree, const AcceptabilityIndex& index,
                               std::size_t trials, std::uint64_t seed) {
  IndexCheckOptions options;
  options.trials = trials;
  options.seed = seed;
  return check_D_variants(tree, index, options);
}

// ---------------------------------------------------------------------------
// Counterexample search

std::optional<CounterexampleFixture> d7_witness(const ScenarioTree& tree,
                                                const AdaptedProcess& d,
                                                const AcceptabilityIndex& index) {
  for (int t = 0; t < tree.horizon(); ++t) {
    const auto today = index.by_atom(tree, t, d);
    const auto next = index.by_atom(tree, t + 1, d);
    for (auto id : tree.nodes_at(t)) {
      if (!(d[id] > 0.0)) continue;
      const auto& level = today[tree.slot(id)];
      if (level.is_infinite()) continue;
      Level lowest = Level::infinity();
      for (auto c : tree.node(id).children) {
        if (next[tree.slot(c)] < lowest) lowest = next[tree.slot(c)];
      }
      const bool strictly_below =
          lowest.is_infinite() ||
          level.value() < lowest.value() * (1.0 - 1e-9) - 1e-12;
      if (!strictly_below) continue;
      CounterexampleFixture fx{index.name(), 0, 0, tree, d, t, id, d[id], level, {}};
      for (auto c : tree.node(id).children) fx.children.push_back({c, next[tree.slot(c)]});
      return fx;
    }
  }
  return std::nullopt;
}

namespace {

std::pair<ScenarioTree, AdaptedProcess> candidate(const CounterexampleSearch& config,
                                                  std::size_t i) {
  auto rng = seeded_rng(config.seed, i);
  TreeShape shape;
  shape.min_depth = config.min_depth;
  shape.max_depth = config.max_depth;
  shape.min_branching = config.branching;
  shape.max_branching = config.branching;
  shape.max_leaves = 1u << 20;
  auto tree = random_tree(rng, shape);
  auto d = random_process(tree, rng, config.value_lo, config.value_hi);
  std::vector<double> rounded(d.values().begin(), d.values().end());
  for (auto& v : rounded) v = std::round(v * 100.0) / 100.0;
  return {std::move(tree), AdaptedProcess(std::move(rounded))};
}

}  // namespace

CounterexampleResult find_d7_counterexample(const AcceptabilityIndex& index,
                                            const CounterexampleSearch& config,
                                            std::size_t budget) {
  CounterexampleResult result;
  if (budget == 0) return result;
  const unsigned workers = std::max(1u, config.workers);
  std::atomic<std::size_t> best{budget};
  std::mutex mu;
  std::optional<CounterexampleFixture> found;

  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < budget; i += workers) {
      if (i >= best.load()) return;
      auto [tree, d] = candidate(config, i);
      auto fx = d7_witness(tree, d, index);
      if (!fx) continue;
      std::lock_guard lock(mu);
      if (i < best.load()) {
        best = i;
        fx->seed = config.seed;
        fx->candidate = i;
        found = std::move(fx);
      }
      return;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  result.fixture = std::move(found);
  result.examined = result.fixture ? result.fixture->candidate + 1 : budget;
  return result;
}

}  // namespace dynrisk
