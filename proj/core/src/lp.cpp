#include "dynrisk/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

#include "dynrisk/errors.hpp"

namespace dynrisk::lp {
namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), cells_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return cells_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  // Row `rows_` holds reduced costs; its rhs holds minus the objective.
  double& cost(std::size_t c) { return at(rows_, c); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis_[pr] = pc;
  }

  void load_costs(const std::vector<double>& c) {
    for (std::size_t j = 0; j <= cols_; ++j) cost(j) = j < c.size() ? c[j] : 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double cb = basis_[r] < c.size() ? c[basis_[r]] : 0.0;
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) cost(j) -= cb * at(r, j);
    }
  }

  // Simplex iterations restricted to entering columns [0, allowed).
  Status iterate(std::size_t allowed, double tol) {
    for (int iter = 0; iter < 100000; ++iter) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (cost(j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return Status::optimal;
      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= tol) continue;
        const double ratio = rhs(r) / a;
        if (leave == rows_ || ratio < best - tol ||
            (std::abs(ratio - best) <= tol && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows_) return Status::unbounded;
      pivot(leave, enter);
    }
    return Status::iteration_limit;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> cells_;
  std::vector<std::size_t> basis_;
};

}  // namespace

Result solve(const Problem& problem, double tolerance) {
  const std::size_t n = problem.c.size();
  const std::size_t m_eq = problem.a_eq.size();
  const std::size_t m_ub = problem.a_ub.size();
  const std::size_t m = m_eq + m_ub;
  if (problem.b_eq.size() != m_eq || problem.b_ub.size() != m_ub) {
    throw InputError("lp: right-hand side size mismatch");
  }
  // Columns: x (n) | slacks (m_ub) | artificials (m).
  const std::size_t slack0 = n;
  const std::size_t art0 = n + m_ub;
  Tableau tab(m, n + m_ub + m);

  for (std::size_t r = 0; r < m; ++r) {
    const bool eq = r < m_eq;
    const auto& row = eq ? problem.a_eq[r] : problem.a_ub[r - m_eq];
    double b = eq ? problem.b_eq[r] : problem.b_ub[r - m_eq];
    if (row.size() != n) throw InputError("lp: constraint row has wrong width");
    const double sign = b < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(r, j) = sign * row[j];
    if (!eq) tab.at(r, slack0 + (r - m_eq)) = sign;
    tab.at(r, art0 + r) = 1.0;
    tab.rhs(r) = sign * b;
    tab.basis()[r] = art0 + r;
  }

  std::vector<double> phase1(n + m_ub + m, 0.0);
  for (std::size_t r = 0; r < m; ++r) phase1[art0 + r] = 1.0;
  tab.load_costs(phase1);
  auto status = tab.iterate(n + m_ub + m, tolerance);
  if (status == Status::iteration_limit) return {status, 0.0, {}};
  if (-tab.cost(tab.cols()) > 1e-9) return {Status::infeasible, 0.0, {}};

  // Drive zero-level artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis()[r] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j) {
      if (std::abs(tab.at(r, j)) > 1e-9) {
        tab.pivot(r, j);
        break;
      }
    }
  }

  std::vector<double> phase2(n + m_ub + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = problem.c[j];
  tab.load_costs(phase2);
  status = tab.iterate(art0, tolerance);
  if (status != Status::optimal) return {status, 0.0, {}};

  Result result;
  result.status = Status::optimal;
  result.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis()[r] < n) result.x[tab.basis()[r]] = tab.rhs(r);
  }
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) result.objective += problem.c[j] * result.x[j];
  return result;
}

}  // namespace dynrisk::lp
