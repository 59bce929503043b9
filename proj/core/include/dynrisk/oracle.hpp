#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dynrisk/indices.hpp"
#include "dynrisk/measure_sets.hpp"
#include "dynrisk/scenario_tree.hpp"

namespace dynrisk::oracle {

enum class Route {
  automatic,           // vertex enumeration when small enough, LP otherwise
  vertex_enumeration,  // refuse when the basis count exceeds max_bases
  linear_program,
};

struct OracleConfig {
  int grid_resolution = 6;
  Route route = Route::automatic;
  double tolerance = 1e-9;
  std::size_t max_bases = 200000;
  std::size_t max_grid_points = 200000;
  std::size_t max_leaves = 20;
};

/// Throws InputError on an invalid configuration.
void validate(const OracleConfig& config);

/// Reference infimum of E_Q[X | F_t] over the set, one value per time-t node.
/// Polytopes are handled through their explicit inequality systems on the
/// leaf simplex, never through the one-step recursion.
SliceValues brute_inf_conditional_expectation(const ScenarioTree& tree, const MeasureSet& set,
                                              std::span<const double> x, int t,
                                              const OracleConfig& config = {});
double brute_inf_at(const ScenarioTree& tree, const MeasureSet& set, std::span<const double> x,
                    NodeId atom, const OracleConfig& config = {});

/// Direct per-atom sum, independent of conditional_expectation().
double brute_conditional_expectation_at(const ScenarioTree& tree, std::span<const double> q,
                                        std::span<const double> x, NodeId atom);

/// Minimum over the simplex grid of resolution `resolution` restricted to the atom.
double grid_inf_full_support(std::span<const double> x_on_atom, int resolution);

/// Reference dGLR: explicit sums over atoms.
Level brute_dglr_at(const ScenarioTree& tree, const AdaptedProcess& d, NodeId atom);

struct GridLevel {
  double lower = 0.0;             // largest grid x with rho^x <= 0, or 0 if none
  double upper = 0.0;             // next grid point, +inf when lower is the grid max
  bool possibly_infinite = false;
};

/// Grid scan of sup{x : rho^x_t(D) <= 0}. The grid must be finite, positive
/// and ascending.
std::vector<GridLevel> brute_sup_level(const ScenarioTree& tree,
                                       const IndexFamilyBacking& backing,
                                       const AdaptedProcess& d, int t,
                                       std::span<const double> grid);

}  // namespace dynrisk::oracle
