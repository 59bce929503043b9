#include "dynrisk/duality.hpp"

#include <algorithm>
#include <cmath>

#include "check_util.hpp"
#include "dynrisk/errors.hpp"

namespace dynrisk {

using detail::num;

void RoundTripReport::finish() {
  max_discrepancy = 0.0;
  for (const auto& row : table) max_discrepancy = std::max(max_discrepancy, row.error);
  pass = max_discrepancy <= tolerance;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InputError("invalid geometric grid");
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo * std::exp(step * static_cast<double>(i));
  }
  out.back() = hi;
  return out;
}

namespace {

void require_grid(std::span<const double> grid) {
  if (grid.empty()) throw InputError("level grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw InputError("level grid must be positive, finite and strictly ascending");
    }
  }
}

std::string where(std::size_t k, int t, const ScenarioTree& tree, NodeId atom, double x) {
  std::string s = "process " + std::to_string(k) + ", t=" + std::to_string(t) + ", atom " +
                  tree.node(atom).label;
  if (!std::isnan(x)) s += ", x=" + num(x);
  return s;
}

constexpr double kLeftSteps[] = {1e-2, 1e-4};
constexpr double kRightSteps[] = {1e-2, 1e-4, 1e-6};

}  // namespace

RoundTripReport roundtrip_from_family(const ScenarioTree& tree, const RiskFamily& family,
                                      std::span<const double> grid,
                                      std::span<const AdaptedProcess> corpus, double tol,
                                      const RoundTripConfig& config) {
  require_grid(grid);
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  RoundTripReport report;
  report.tolerance = tol;
  report.continuity_probe = "left, relative steps x*1e-2, x*1e-4";

  std::vector<RiskMeasure> members;
  for (double x : grid) members.push_back(family.member(x));

  // Preconditions: increasing on the grid, probed left-continuity.
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    for (int t = 0; t <= tree.horizon(); ++t) {
      for (auto atom : tree.nodes_at(t)) {
        double prev = -HUGE_VAL;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const double v = members[i].at_atom(tree, t, corpus[k], atom);
          if (v < prev - 1e-9 * (1.0 + std::abs(prev))) {
            throw InputError("family is not increasing in x: " + where(k, t, tree, atom, grid[i]) +
                             " gives " + num(v) + " after " + num(prev));
          }
          prev = v;
          double gaps[2];
          for (int j = 0; j < 2; ++j) {
            const double below = family.member(grid[i] * (1.0 - kLeftSteps[j]))
                                     .at_atom(tree, t, corpus[k], atom);
            gaps[j] = std::abs(v - below);
          }
          if (gaps[1] > 0.5 * gaps[0] + 1e-9 && report.continuity_ok) {
            report.continuity_ok = false;
            report.note = "left-continuity probe did not converge at " +
                          where(k, t, tree, atom, grid[i]);
          }
        }
      }
    }
  }

  std::vector<double> rebuilt_values;
  const auto alpha = family_index(IndexFamilyBacking{family}, config.search, family.name + "-index");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto rebuilt = dcrm_from_index(alpha, grid[i], config.bisection);
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      for (int t = 0; t <= tree.horizon(); ++t) {
        for (auto atom : tree.nodes_at(t)) {
          const double want = members[i].at_atom(tree, t, corpus[k], atom);
          const double got = rebuilt.at_atom(tree, t, corpus[k], atom);
          rebuilt_values.push_back(got);
          report.table.push_back(
              {grid[i], k, t, tree.node(atom).label, num(want), num(got), std::abs(got - want)});
        }
      }
    }
  }
  // Monotone reconstruction along the grid.
  const std::size_t per_x = rebuilt_values.size() / grid.size();
  for (std::size_t i = 1; i < grid.size() && report.monotone; ++i) {
    for (std::size_t r = 0; r < per_x; ++r) {
      if (rebuilt_values[i * per_x + r] < rebuilt_values[(i - 1) * per_x + r] - 1e-8) {
        report.monotone = false;
        break;
      }
    }
  }
  report.finish();
  return report;
}

RoundTripReport roundtrip_from_index(const ScenarioTree& tree, const AcceptabilityIndex& index,
                                     std::span<const double> grid,
                                     std::span<const AdaptedProcess> corpus, double tol,
                                     const RoundTripConfig& config) {
  require_grid(grid);
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  RoundTripReport report;
  report.tolerance = tol;
  report.continuity_probe = "right, payments c = 1e-2, 1e-4, 1e-6 at t";

  // Right-continuity in the time-t payment.
  for (std::size_t k = 0; k < corpus.size() && report.continuity_ok; ++k) {
    for (int t = 0; t <= tree.horizon() && report.continuity_ok; ++t) {
      const auto base = index.by_atom(tree, t, corpus[k]);
      std::vector<SliceLevels> shifted;
      for (double c : kRightSteps) {
        shifted.push_back(
            index.by_atom(tree, t, corpus[k] + AdaptedProcess::single_payment(tree, t, c)));
      }
      for (auto atom : tree.nodes_at(t)) {
        const auto s = tree.slot(atom);
        bool ok = true;
        for (std::size_t j = 0; j < shifted.size(); ++j) {
          ok = ok && level_at_least(shifted[j][s], base[s], 1e-9);
          if (j > 0) ok = ok && level_at_least(shifted[j - 1][s], shifted[j][s], 1e-9);
        }
        if (base[s].is_infinite()) {
          ok = ok && shifted.back()[s].is_infinite();
        } else {
          ok = ok && level_close(shifted.back()[s], base[s], 1e-4);
        }
        if (!ok) {
          report.continuity_ok = false;
          report.note = "right-continuity probe did not converge at " +
                        where(k, t, tree, atom, std::nan(""));
          break;
        }
      }
    }
  }

  // Dual family on the grid; doubles as the normalization probe.
  std::vector<RiskMeasure> members;
  for (double x : grid) members.push_back(dcrm_from_index(index, x, config.bisection));
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    for (int t = 0; t <= tree.horizon(); ++t) {
      for (auto atom : tree.nodes_at(t)) {
        double prev = -HUGE_VAL;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          double v = 0.0;
          try {
            v = members[i].at_atom(tree, t, corpus[k], atom);
          } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (" +
                                 where(k, t, tree, atom, grid[i]) + ")");
          }
          if (v < prev - 1e-8) report.monotone = false;
          prev = v;
        }
      }
    }
  }

  RiskFamily dual{index.name() + "-dual",
                  [index, bisection = config.bisection](double x) {
                    return dcrm_from_index(index, x, bisection);
                  }};
  const IndexFamilyBacking backing{dual};
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    for (int t = 0; t <= tree.horizon(); ++t) {
      const auto want = index.by_atom(tree, t, corpus[k]);
      for (auto atom : tree.nodes_at(t)) {
        const auto got = index_from_family_at(tree, backing, corpus[k], atom, config.search);
        const auto& w = want[tree.slot(atom)];
        report.table.push_back({std::nan(""), k, t, tree.node(atom).label, w.to_string(),
                                got.to_string(), level_discrepancy(got, w, config.search.x_max)});
      }
    }
  }
  report.finish();
  return report;
}

AcceptabilityIndex two_level_index() {
  return AcceptabilityIndex::from_atoms(
      "two-level", [](const ScenarioTree& tree, int t, const AdaptedProcess& d, NodeId atom) {
        const auto cum = cumulative_from(tree, d, t);
        for (auto leaf : tree.atom(atom)) {
          if (cum[leaf] < 0.0) return Level::zero();
        }
        return Level::infinity();
      });
}

}  // namespace dynrisk
