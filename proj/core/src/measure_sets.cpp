#include "dynrisk/measure_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dynrisk/errors.hpp"
#include "dynrisk/lp.hpp"

namespace dynrisk {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void validate_probability(const ScenarioTree& tree, std::span<const double> q,
                          const std::string& what, bool full_support) {
  if (q.size() != tree.leaf_count()) {
    throw InputError(what + ": expected " + std::to_string(tree.leaf_count()) +
                     " leaf probabilities, got " + std::to_string(q.size()));
  }
  double sum = 0.0;
  for (double v : q) {
    if (!std::isfinite(v) || v < 0.0) throw InputError(what + ": negative or non-finite entry");
    if (full_support && !(v > 0.0)) throw InputError(what + ": must have full support");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError(what + ": probabilities do not sum to 1");
}

bool is_probability(std::span<const double> q, std::size_t leaves) {
  if (q.size() != leaves) return false;
  double sum = 0.0;
  for (double v : q) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

void require_finite(std::span<const double> x) {
  for (double v : x) {
    if (std::isnan(v)) throw NumericalError("NaN in terminal variable");
  }
}

double atom_min(const ScenarioTree& tree, std::span<const double> x, NodeId node) {
  double best = std::numeric_limits<double>::infinity();
  for (auto leaf : tree.atom(node)) best = std::min(best, x[leaf]);
  return best;
}

struct ChildValue {
  double value;
  NodeId id;
  double p;  // one-step conditional reference probability
};

// Backward recursion below `node` for the one-step capped sets. The cap on
// density growth is equivalent to bounds on one-step conditional probabilities:
// q_j <= a p_j (upper) or q_j >= p_j / a (lower).
double cap_value(const ScenarioTree& tree, std::span<const double> x, NodeId node, double a,
                 bool upper) {
  const auto& n = tree.node(node);
  if (n.children.empty()) return x[tree.leaf_index(node)];
  std::vector<ChildValue> kids;
  kids.reserve(n.children.size());
  for (auto c : n.children) {
    kids.push_back({cap_value(tree, x, c, a, upper), c, tree.mass(c) / tree.mass(node)});
  }
  auto by_value = [](const ChildValue& l, const ChildValue& r) {
    return l.value < r.value || (l.value == r.value && l.id < r.id);
  };
  if (upper) {
    std::sort(kids.begin(), kids.end(), by_value);
    double remaining = 1.0;
    double total = 0.0;
    for (const auto& k : kids) {
      const double q = std::min(a * k.p, remaining);
      total += q * k.value;
      remaining -= q;
      if (remaining <= 0.0) break;
    }
    return total;
  }
  double total = 0.0;
  double floor_mass = 0.0;
  for (const auto& k : kids) {
    total += (k.p / a) * k.value;
    floor_mass += k.p / a;
  }
  const auto lowest = std::min_element(kids.begin(), kids.end(), by_value);
  return total + (1.0 - floor_mass) * lowest->value;
}

std::vector<double> exponential_weights(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(n);
  double sum = 0.0;
  for (auto& v : w) {
    do {
      v = expo(rng);
    } while (!(v > 0.0));
    sum += v;
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Random one-step conditional probabilities inside the cap box around p.
std::vector<double> capped_step(std::span<const double> p, double a, bool upper,
                                std::mt19937_64& rng) {
  auto d = exponential_weights(p.size(), rng);
  double theta_max = 1.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (upper && d[j] > p[j]) theta_max = std::min(theta_max, (a - 1.0) * p[j] / (d[j] - p[j]));
    if (!upper && d[j] < p[j]) {
      theta_max = std::min(theta_max, (p[j] - p[j] / a) / (p[j] - d[j]));
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double theta = unit(rng) < 0.5 ? theta_max : theta_max * unit(rng);
  std::vector<double> q(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) q[j] = p[j] + theta * (d[j] - p[j]);
  return q;
}

void fill_capped(const ScenarioTree& tree, NodeId node, double mass, double a, bool upper,
                 std::mt19937_64& rng, StateVector& out) {
  const auto& n = tree.node(node);
  if (n.children.empty()) {
    out[tree.leaf_index(node)] = mass;
    return;
  }
  std::vector<double> p;
  for (auto c : n.children) p.push_back(tree.mass(c) / tree.mass(node));
  auto q = capped_step(p, a, upper, rng);
  for (std::size_t j = 0; j < n.children.size(); ++j) {
    fill_capped(tree, n.children[j], mass * q[j], a, upper, rng, out);
  }
}

std::vector<double> atom_masses(const ScenarioTree& tree, std::span<const double> q) {
  std::vector<double> m(tree.node_count(), 0.0);
  for (NodeId id = 0; id < tree.node_count(); ++id) {
    for (auto leaf : tree.atom(id)) m[id] += q[leaf];
  }
  return m;
}

}  // namespace

MeasureSetSequence MeasureSetSequence::constant(const ScenarioTree& tree, const MeasureSet& set) {
  return MeasureSetSequence{
      std::vector<MeasureSet>(static_cast<std::size_t>(tree.horizon()) + 1, set)};
}

std::string kind_name(const MeasureSet& set) {
  return std::visit(overloaded{
                        [](const sets::Singleton&) { return std::string("singleton"); },
                        [](const sets::FullSupport&) { return std::string("full_support"); },
                        [](const sets::ExtremePoints&) { return std::string("extreme_points"); },
                        [](const sets::CapUpper&) { return std::string("cap_upper"); },
                        [](const sets::CapLower&) { return std::string("cap_lower"); },
                        [](const sets::ExcludeOne&) { return std::string("exclude_one"); },
                    },
                    set);
}

void validate_measure_set(const ScenarioTree& tree, const MeasureSet& set) {
  std::visit(overloaded{
                 [&](const sets::Singleton& s) { validate_probability(tree, s.q, "singleton", false); },
                 [](const sets::FullSupport&) {},
                 [&](const sets::ExtremePoints& s) {
                   if (s.vertices.empty()) throw InputError("extreme_points: no vertices");
                   for (const auto& v : s.vertices) validate_probability(tree, v, "extreme_points", false);
                 },
                 [](const sets::CapUpper& s) {
                   if (!(s.a >= 1.0) || !std::isfinite(s.a)) throw InputError("cap_upper: a must be >= 1");
                 },
                 [](const sets::CapLower& s) {
                   if (!(s.a >= 1.0) || !std::isfinite(s.a)) throw InputError("cap_lower: a must be >= 1");
                 },
                 [&](const sets::ExcludeOne& s) {
                   validate_probability(tree, s.excluded, "exclude_one", true);
                 },
             },
             set);
}

void validate_sequence(const ScenarioTree& tree, const MeasureSetSequence& seq) {
  if (seq.sets.size() != static_cast<std::size_t>(tree.horizon()) + 1) {
    throw InputError("measure-set sequence has " + std::to_string(seq.sets.size()) +
                     " entries, expected horizon + 1 = " + std::to_string(tree.horizon() + 1));
  }
  for (const auto& s : seq.sets) validate_measure_set(tree, s);
}

double robust_conditional_expectation_at(const ScenarioTree& tree, const MeasureSet& set,
                                         std::span<const double> x, NodeId node) {
  if (x.size() != tree.leaf_count()) throw InputError("terminal variable has wrong size");
  require_finite(x);
  return std::visit(
      overloaded{
          [&](const sets::Singleton& s) { return conditional_expectation_at(tree, s.q, x, node); },
          [&](const sets::FullSupport&) { return atom_min(tree, x, node); },
          [&](const sets::ExcludeOne&) { return atom_min(tree, x, node); },
          [&](const sets::ExtremePoints& s) {
            double best = std::numeric_limits<double>::infinity();
            bool charged = false;
            for (const auto& v : s.vertices) {
              double mass = 0.0;
              for (auto leaf : tree.atom(node)) mass += v[leaf];
              if (!(mass > 0.0)) continue;
              charged = true;
              best = std::min(best, conditional_expectation_at(tree, v, x, node));
            }
            if (!charged) {
              throw NumericalError("conditioning on null atom '" + tree.node(node).label +
                                   "': no vertex charges it");
            }
            return best;
          },
          [&](const sets::CapUpper& s) { return cap_value(tree, x, node, s.a, true); },
          [&](const sets::CapLower& s) { return cap_value(tree, x, node, s.a, false); },
      },
      set);
}

SliceValues robust_conditional_expectation(const ScenarioTree& tree, const MeasureSet& set,
                                           std::span<const double> x, int t) {
  tree.require_time(t);
  SliceValues out;
  out.reserve(tree.level_size(t));
  for (auto id : tree.nodes_at(t)) out.push_back(robust_conditional_expectation_at(tree, set, x, id));
  return out;
}

std::vector<double> density_process(const ScenarioTree& tree, std::span<const double> q) {
  auto m = atom_masses(tree, q);
  for (NodeId id = 0; id < tree.node_count(); ++id) m[id] /= tree.mass(id);
  return m;
}

bool is_member(const ScenarioTree& tree, std::span<const double> q, const MeasureSet& set,
               double tolerance) {
  if (!is_probability(q, tree.leaf_count())) return false;
  auto full_support = [&] { return std::all_of(q.begin(), q.end(), [](double v) { return v > 0.0; }); };
  return std::visit(
      overloaded{
          [&](const sets::Singleton& s) {
            for (std::size_t i = 0; i < q.size(); ++i) {
              if (std::abs(q[i] - s.q[i]) > tolerance) return false;
            }
            return true;
          },
          [&](const sets::FullSupport&) { return full_support(); },
          [&](const sets::ExcludeOne& s) {
            for (std::size_t i = 0; i < q.size(); ++i) {
              if (std::abs(q[i] - s.excluded[i]) > tolerance) return true;
            }
            return false;
          },
          [&](const sets::ExtremePoints& s) {
            // q = sum_k lambda_k v_k, lambda in the simplex.
            lp::Problem prob;
            const std::size_t k = s.vertices.size();
            prob.c.assign(k, 0.0);
            prob.a_eq.emplace_back(k, 1.0);
            prob.b_eq.push_back(1.0);
            for (std::size_t leaf = 0; leaf < q.size(); ++leaf) {
              std::vector<double> row(k);
              for (std::size_t j = 0; j < k; ++j) row[j] = s.vertices[j][leaf];
              prob.a_eq.push_back(std::move(row));
              prob.b_eq.push_back(q[leaf]);
            }
            return lp::solve(prob).status == lp::Status::optimal;
          },
          [&](const sets::CapUpper& s) {
            if (!full_support()) return false;
            auto z = density_process(tree, q);
            for (NodeId id = 1; id < tree.node_count(); ++id) {
              const double bound = s.a * z[*tree.node(id).parent];
              if (z[id] > bound * (1.0 + tolerance) + tolerance) return false;
            }
            return true;
          },
          [&](const sets::CapLower& s) {
            if (!full_support()) return false;
            auto z = density_process(tree, q);
            for (NodeId id = 1; id < tree.node_count(); ++id) {
              // E_Q[dP/dQ | B] = P(B)/Q(B) = 1 / z(B).
              const double here = 1.0 / z[id];
              const double bound = s.a / z[*tree.node(id).parent];
              if (here > bound * (1.0 + tolerance) + tolerance) return false;
            }
            return true;
          },
      },
      set);
}

StateVector sample_member(const ScenarioTree& tree, const MeasureSet& set, std::mt19937_64& rng) {
  return std::visit(
      overloaded{
          [&](const sets::Singleton& s) { return s.q; },
          [&](const sets::FullSupport&) { return exponential_weights(tree.leaf_count(), rng); },
          [&](const sets::ExcludeOne& s) {
            while (true) {
              auto q = exponential_weights(tree.leaf_count(), rng);
              if (q != s.excluded) return q;
            }
          },
          [&](const sets::ExtremePoints& s) {
            auto w = exponential_weights(s.vertices.size(), rng);
            StateVector q(tree.leaf_count(), 0.0);
            for (std::size_t k = 0; k < w.size(); ++k) {
              for (std::size_t leaf = 0; leaf < q.size(); ++leaf) q[leaf] += w[k] * s.vertices[k][leaf];
            }
            return q;
          },
          [&](const sets::CapUpper& s) {
            StateVector q(tree.leaf_count(), 0.0);
            fill_capped(tree, tree.root(), 1.0, s.a, true, rng, q);
            return q;
          },
          [&](const sets::CapLower& s) {
            StateVector q(tree.leaf_count(), 0.0);
            fill_capped(tree, tree.root(), 1.0, s.a, false, rng, q);
            return q;
          },
      },
      set);
}

std::vector<StateVector> probe_variables(const ScenarioTree& tree, std::size_t trials,
                                         std::uint64_t seed) {
  std::vector<StateVector> probes;
  const auto n = tree.leaf_count();
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    StateVector e(n, 0.0);
    e[leaf] = 1.0;
    probes.push_back(std::move(e));
  }
  probes.emplace_back(n, 1.0);
  probes.emplace_back(n, -1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t k = 0; k < trials; ++k) {
    StateVector x(n);
    for (auto& v : x) v = u(rng);
    probes.push_back(std::move(x));
  }
  return probes;
}

namespace {

// Per time-t atom: min and max of a time-(t+1) slice over the atom's children.
std::pair<double, double> child_range(const ScenarioTree& tree, NodeId atom,
                                      const SliceValues& next) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto c : tree.node(atom).children) {
    lo = std::min(lo, next[tree.slot(c)]);
    hi = std::max(hi, next[tree.slot(c)]);
  }
  return {lo, hi};
}

ConsistencyReport sandwich_check(const ScenarioTree& tree, const MeasureSetSequence& seq,
                                 std::size_t trials, std::uint64_t seed, double tol,
                                 bool check_lower, bool check_upper, const std::string& name) {
  ConsistencyReport report;
  for (const auto& x : probe_variables(tree, trials, seed)) {
    for (int t = 0; t < tree.horizon(); ++t) {
      auto today = robust_conditional_expectation(tree, seq.at(t), x, t);
      auto next = robust_conditional_expectation(tree, seq.at(t + 1), x, t + 1);
      for (auto atom : tree.nodes_at(t)) {
        ++report.evaluations;
        auto [lo, hi] = child_range(tree, atom, next);
        const double v = today[tree.slot(atom)];
        const bool bad = (check_lower && v < lo - tol) || (check_upper && v > hi + tol);
        if (bad && report.passed) {
          report.passed = false;
          report.violation = ConsistencyViolation{x, t, tree.node(atom).label, lo, v, hi, name};
        }
      }
    }
  }
  return report;
}

}  // namespace

ConsistencyReport check_dynamic_consistency(const ScenarioTree& tree,
                                            const MeasureSetSequence& seq, std::size_t trials,
                                            std::uint64_t seed, double tolerance) {
  validate_sequence(tree, seq);
  return sandwich_check(tree, seq, trials, seed, tolerance, true, true,
                        "min_{A} inf E[X|F_{t+1}] <= inf E[X|F_t] <= max_{A} inf E[X|F_{t+1}]");
}

ConsistencyReport check_weak_consistency(const ScenarioTree& tree, const MeasureSet& set,
                                         std::size_t trials, std::uint64_t seed,
                                         double tolerance) {
  validate_measure_set(tree, set);
  return sandwich_check(tree, MeasureSetSequence::constant(tree, set), trials, seed, tolerance,
                        true, true, "weak consistency with universal lower bound");
}

ConsistencyReport check_strong_consistency(const ScenarioTree& tree, const MeasureSet& set,
                                           std::size_t trials, std::uint64_t seed,
                                           double tolerance) {
  validate_measure_set(tree, set);
  ConsistencyReport report;
  for (const auto& x : probe_variables(tree, trials, seed)) {
    for (int t = 0; t < tree.horizon(); ++t) {
      auto direct = robust_conditional_expectation(tree, set, x, t);
      auto inner = broadcast(tree, t + 1, robust_conditional_expectation(tree, set, x, t + 1));
      auto nested = robust_conditional_expectation(tree, set, inner, t);
      for (auto atom : tree.nodes_at(t)) {
        ++report.evaluations;
        const auto k = tree.slot(atom);
        if (std::abs(direct[k] - nested[k]) > tolerance && report.passed) {
          report.passed = false;
          report.violation = ConsistencyViolation{
              x, t, tree.node(atom).label, nested[k], direct[k], nested[k],
              "inf E[X|F_t] == inf E[inf E[X|F_{t+1}]|F_t]"};
        }
      }
    }
  }
  return report;
}

}  // namespace dynrisk
