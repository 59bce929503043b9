#pragma once

#include <vector>

namespace dynrisk::lp {

/// min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.
struct Problem {
  std::vector<double> c;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Two-phase dense tableau simplex with Bland's rule. Intended for the small,
/// highly degenerate problems of the oracle; not a general-purpose solver.
Result solve(const Problem& problem, double tolerance = 1e-11);

}  // namespace dynrisk::lp
