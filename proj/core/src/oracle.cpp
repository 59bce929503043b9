#include "dynrisk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dynrisk/errors.hpp"
#include "dynrisk/lp.hpp"

namespace dynrisk::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Linear system G q <= h over the conditional measure q on one atom, plus sum q = 1.
struct Polytope {
  std::vector<std::vector<double>> g;
  std::vector<double> h;
};

std::vector<double> atom_values(const ScenarioTree& tree, std::span<const double> x,
                                NodeId atom) {
  std::vector<double> out;
  for (auto leaf : tree.atom(atom)) out.push_back(x[leaf]);
  return out;
}

/// Every node strictly below the atom, excluding leaves of a leaf atom.
std::vector<NodeId> descendants(const ScenarioTree& tree, NodeId atom) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{atom};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    for (auto c : tree.node(id).children) {
      out.push_back(c);
      stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Row with 1 on the leaves of node `b`, offsets relative to the atom.
std::vector<double> indicator_row(const ScenarioTree& tree, NodeId b, std::size_t offset,
                                  std::size_t n, double weight) {
  std::vector<double> row(n, 0.0);
  for (auto leaf : tree.atom(b)) row[leaf - offset] = weight;
  return row;
}

/// Density-process constraints for every parent/child pair below the atom:
///   upper: Q(B)/P(B) <= a Q(B')/P(B')
///   lower: P(B)/Q(B) <= a P(B')/Q(B'), i.e. P(B) Q(B') <= a P(B') Q(B)
Polytope cap_polytope(const ScenarioTree& tree, NodeId atom, double a, bool upper,
                      bool with_nonnegativity) {
  const auto& an = tree.node(atom);
  const std::size_t n = an.leaf_end - an.leaf_begin;
  Polytope poly;
  if (with_nonnegativity) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(n, 0.0);
      row[i] = -1.0;
      poly.g.push_back(std::move(row));
      poly.h.push_back(0.0);
    }
  }
  for (auto b : descendants(tree, atom)) {
    const NodeId parent = *tree.node(b).parent;
    const double ratio = tree.mass(b) / tree.mass(parent);
    auto child = indicator_row(tree, b, an.leaf_begin, n, 1.0);
    auto par = indicator_row(tree, parent, an.leaf_begin, n, 1.0);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = upper ? child[i] - a * ratio * par[i] : ratio * par[i] - a * child[i];
    }
    poly.g.push_back(std::move(row));
    poly.h.push_back(0.0);
  }
  return poly;
}

double binomial(std::size_t m, std::size_t k) {
  if (k > m) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(m - k + i) / static_cast<double>(i);
  return r;
}

/// Solves the square system in place; false when numerically singular.
bool solve_square(std::vector<std::vector<double>>& m, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-12) return false;
    std::swap(m[piv], m[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= m[i][i];
  return true;
}

/// Minimum of x.q over the vertices of {q : sum q = 1, G q <= h}, found by
/// trying every choice of n-1 active inequalities.
double enumerate_vertices(const Polytope& poly, std::span<const double> x, double tol) {
  const std::size_t n = x.size();
  const std::size_t m = poly.g.size();
  const std::size_t k = n - 1;
  double best = kInf;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  if (k > m) throw OracleRefusal("polytope has fewer constraints than dimensions");
  while (true) {
    std::vector<std::vector<double>> mat(n, std::vector<double>(n, 1.0));
    std::vector<double> rhs(n, 1.0);
    for (std::size_t r = 0; r < k; ++r) {
      mat[r + 1] = poly.g[pick[r]];
      rhs[r + 1] = poly.h[pick[r]];
    }
    if (solve_square(mat, rhs)) {
      bool feasible = true;
      for (std::size_t r = 0; r < m && feasible; ++r) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < n; ++i) lhs += poly.g[r][i] * rhs[i];
        feasible = lhs <= poly.h[r] + tol;
      }
      if (feasible) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += rhs[i] * x[i];
        best = std::min(best, v);
      }
    }
    // next combination
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == m - k + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  if (!std::isfinite(best)) throw NumericalError("polytope has no feasible vertex");
  return best;
}

double solve_polytope_lp(const Polytope& poly, std::span<const double> x) {
  lp::Problem prob;
  prob.c.assign(x.begin(), x.end());
  prob.a_eq.push_back(std::vector<double>(x.size(), 1.0));
  prob.b_eq.push_back(1.0);
  prob.a_ub = poly.g;
  prob.b_ub = poly.h;
  const auto res = lp::solve(prob);
  if (res.status != lp::Status::optimal) throw NumericalError("oracle LP did not reach an optimum");
  return res.objective;
}

double cap_inf(const ScenarioTree& tree, NodeId atom, std::span<const double> x, double a,
               bool upper, const OracleConfig& config) {
  const auto xs = atom_values(tree, x, atom);
  const std::size_t n = xs.size();
  if (n == 1) return xs[0];
  const auto full = cap_polytope(tree, atom, a, upper, true);
  const double bases = binomial(full.g.size(), n - 1);
  const bool small = bases <= static_cast<double>(config.max_bases);
  if (config.route == Route::vertex_enumeration && !small) {
    throw OracleRefusal("vertex enumeration would try " + std::to_string(bases) +
                        " bases, above the configured limit");
  }
  if (config.route == Route::linear_program || !small) {
    return solve_polytope_lp(cap_polytope(tree, atom, a, upper, false), xs);
  }
  return enumerate_vertices(full, xs, config.tolerance);
}

double extreme_points_inf(const ScenarioTree& tree, NodeId atom, std::span<const double> x,
                          const sets::ExtremePoints& ep, const OracleConfig& config) {
  std::vector<double> cost;
  std::vector<double> mass;
  for (const auto& v : ep.vertices) {
    double c = 0.0;
    double m = 0.0;
    for (auto leaf : tree.atom(atom)) {
      c += v[leaf] * x[leaf];
      m += v[leaf];
    }
    cost.push_back(c);
    mass.push_back(m);
  }
  if (std::all_of(mass.begin(), mass.end(), [](double m) { return m <= 0.0; })) {
    throw NumericalError("no vertex charges atom " + tree.node(atom).label);
  }
  if (config.route == Route::vertex_enumeration) {
    // Basic solutions of the Charnes-Cooper program: mu = e_k / mass_k.
    double best = kInf;
    for (std::size_t k = 0; k < cost.size(); ++k) {
      if (mass[k] > 0.0) best = std::min(best, cost[k] / mass[k]);
    }
    return best;
  }
  // min sum mu_k cost_k  s.t.  sum mu_k mass_k = 1, mu >= 0.
  lp::Problem prob;
  prob.c = cost;
  prob.a_eq.push_back(mass);
  prob.b_eq.push_back(1.0);
  const auto res = lp::solve(prob);
  if (res.status != lp::Status::optimal) throw NumericalError("oracle LP did not reach an optimum");
  return res.objective;
}

double full_support_inf(const ScenarioTree& tree, NodeId atom, std::span<const double> x,
                        const OracleConfig& config) {
  const auto xs = atom_values(tree, x, atom);
  const double exact = *std::min_element(xs.begin(), xs.end());
  const double points = binomial(static_cast<std::size_t>(config.grid_resolution) + xs.size() - 1,
                                 xs.size() - 1);
  if (points > static_cast<double>(config.max_grid_points)) {
    if (config.route == Route::vertex_enumeration) {
      throw OracleRefusal("simplex grid too large for atom " + tree.node(atom).label);
    }
    return exact;
  }
  const double grid = grid_inf_full_support(xs, config.grid_resolution);
  if (std::abs(grid - exact) > config.tolerance * (1.0 + std::abs(exact))) {
    throw NumericalError("simplex grid minimum " + std::to_string(grid) +
                         " disagrees with the atom minimum " + std::to_string(exact));
  }
  return grid;
}

}  // namespace

void validate(const OracleConfig& config) {
  if (config.grid_resolution < 2) throw InputError("oracle grid resolution must be >= 2");
  if (!(config.tolerance > 0.0)) throw InputError("oracle tolerance must be positive");
}

double brute_conditional_expectation_at(const ScenarioTree& tree, std::span<const double> q,
                                        std::span<const double> x, NodeId atom) {
  double num = 0.0;
  double mass = 0.0;
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    if (tree.ancestor(leaf, tree.node(atom).time) != atom) continue;
    num += q[leaf] * x[leaf];
    mass += q[leaf];
  }
  if (!(mass > 0.0)) throw NumericalError("conditioning on null atom " + tree.node(atom).label);
  return num / mass;
}

double grid_inf_full_support(std::span<const double> x_on_atom, int resolution) {
  const std::size_t n = x_on_atom.size();
  double best = kInf;
  std::vector<int> k(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == n) {
      k[i] = left;
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += k[j] * x_on_atom[j];
      best = std::min(best, v / resolution);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      k[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, resolution);
  return best;
}

double brute_inf_at(const ScenarioTree& tree, const MeasureSet& set, std::span<const double> x,
                    NodeId atom, const OracleConfig& config) {
  validate(config);
  if (tree.leaf_count() > config.max_leaves) {
    throw OracleRefusal("oracle limited to " + std::to_string(config.max_leaves) + " leaves");
  }
  if (x.size() != tree.leaf_count()) throw InputError("variable does not match the tree");
  validate_measure_set(tree, set);
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, sets::Singleton>) {
          return brute_conditional_expectation_at(tree, s.q, x, atom);
        } else if constexpr (std::is_same_v<S, sets::ExtremePoints>) {
          return extreme_points_inf(tree, atom, x, s, config);
        } else if constexpr (std::is_same_v<S, sets::CapUpper>) {
          return cap_inf(tree, atom, x, s.a, true, config);
        } else if constexpr (std::is_same_v<S, sets::CapLower>) {
          return cap_inf(tree, atom, x, s.a, false, config);
        } else {
          return full_support_inf(tree, atom, x, config);
        }
      },
      set);
}

SliceValues brute_inf_conditional_expectation(const ScenarioTree& tree, const MeasureSet& set,
                                              std::span<const double> x, int t,
                                              const OracleConfig& config) {
  tree.require_time(t);
  SliceValues out;
  for (auto id : tree.nodes_at(t)) out.push_back(brute_inf_at(tree, set, x, id, config));
  return out;
}

Level brute_dglr_at(const ScenarioTree& tree, const AdaptedProcess& d, NodeId atom) {
  const int t = tree.node(atom).time;
  const auto p = tree.reference_probability();
  double mean = 0.0;
  double shortfall = 0.0;
  double mass = 0.0;
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    if (tree.ancestor(leaf, t) != atom) continue;
    double cum = 0.0;
    std::optional<NodeId> id = tree.leaf_node(leaf);
    while (id && tree.node(*id).time >= t) {
      cum += d[*id];
      id = tree.node(*id).parent;
    }
    mean += p[leaf] * cum;
    shortfall += p[leaf] * (cum < 0.0 ? -cum : 0.0);
    mass += p[leaf];
  }
  mean /= mass;
  shortfall /= mass;
  if (mean <= 0.0) return Level::zero();
  if (shortfall <= 0.0) return Level::infinity();
  return Level::finite(mean / shortfall);
}

std::vector<GridLevel> brute_sup_level(const ScenarioTree& tree,
                                       const IndexFamilyBacking& backing,
                                       const AdaptedProcess& d, int t,
                                       std::span<const double> grid) {
  tree.require_time(t);
  if (grid.empty()) throw InputError("level grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw InputError("level grid must be positive, finite and strictly ascending");
    }
  }
  const auto cum = cumulative_from(tree, d, t);
  std::vector<GridLevel> out;
  for (auto id : tree.nodes_at(t)) {
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      bool ok = false;
      if (const auto* fam = std::get_if<RiskFamily>(&backing)) {
        ok = fam->member(grid[i]).at_atom(tree, t, d, id) <= 0.0;
      } else {
        const auto seq = std::get<MeasureSetFamily>(backing)(tree, grid[i]);
        OracleConfig cfg;
        cfg.max_leaves = tree.leaf_count();
        ok = brute_inf_at(tree, seq.at(t), cum, id, cfg) >= 0.0;
      }
      if (ok) last = i;
    }
    GridLevel g;
    if (!last) {
      g.upper = grid.front();
    } else {
      g.lower = grid[*last];
      g.possibly_infinite = *last + 1 == grid.size();
      g.upper = g.possibly_infinite ? kInf : grid[*last + 1];
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace dynrisk::oracle
