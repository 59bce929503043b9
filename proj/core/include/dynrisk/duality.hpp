#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dynrisk/indices.hpp"
#include "dynrisk/risk_measures.hpp"

namespace dynrisk {

struct Discrepancy {
  double x = std::numeric_limits<double>::quiet_NaN();  // NaN for level comparisons
  std::size_t process = 0;
  int t = 0;
  std::string atom;
  std::string expected;
  std::string actual;
  double error = 0.0;
};

struct RoundTripReport {
  std::vector<Discrepancy> table;
  double max_discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Continuity probe outcome and the step sizes it used.
  bool continuity_ok = true;
  std::string continuity_probe;
  /// Reconstructed rho^x nondecreasing in x over the grid.
  bool monotone = true;
  std::string note;

  void finish();
};

/// Geometric grid, `count` points from lo to hi inclusive.
std::vector<double> geometric_grid(double lo = 1e-3, double hi = 1e3, std::size_t count = 32);

struct RoundTripConfig {
  LevelSearch search;
  BisectionConfig bisection;
};

/// alpha = index_from_family(family); rho-hat^x = dcrm_from_index(alpha, x);
/// compares with rho^x. Throws InputError when the family is observed to
/// decrease on the grid.
RoundTripReport roundtrip_from_family(const ScenarioTree& tree, const RiskFamily& family,
                                      std::span<const double> grid,
                                      std::span<const AdaptedProcess> corpus, double tol,
                                      const RoundTripConfig& config = {});

/// rho^x = dcrm_from_index(index, x); alpha-hat = index_from_family(rho);
/// compares levels. Throws NumericalError naming (D, t, x) when no c drives
/// the index up to x.
RoundTripReport roundtrip_from_index(const ScenarioTree& tree, const AcceptabilityIndex& index,
                                     std::span<const double> grid,
                                     std::span<const AdaptedProcess> corpus, double tol,
                                     const RoundTripConfig& config = {});

/// +inf on atoms where the remaining cumulative cash flow is nonnegative on
/// every state, 0 elsewhere.
AcceptabilityIndex two_level_index();

}  // namespace dynrisk
