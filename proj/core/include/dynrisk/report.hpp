#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

namespace dynrisk {

/// Outcome of one randomized property check (an axiom or one of its variants).
struct PropertyResult {
  std::string name;
  bool passed = true;
  std::size_t checked = 0;  // evaluations where the hypothesis held
  std::size_t skipped = 0;  // hypothesis unsatisfiable for that draw
  double min_effective_ratio = 0.0;  // required checked / (checked + skipped)
  std::string witness;      // first violation, empty when passed

  double effective_ratio() const {
    const auto total = checked + skipped;
    return total == 0 ? 0.0 : static_cast<double>(checked) / static_cast<double>(total);
  }
  void fail(std::string what) {
    if (passed) witness = std::move(what);
    passed = false;
  }
};

struct PropertyReport {
  std::deque<PropertyResult> results;  // deque: add() hands out stable references

  bool passed() const {
    for (const auto& r : results) {
      if (!r.passed) return false;
    }
    return true;
  }
  /// Throws std::out_of_range when no result carries this name.
  const PropertyResult& at(std::string_view name) const;
  PropertyResult& add(std::string name, double min_effective_ratio = 0.0);
};

using AxiomReport = PropertyReport;
using VariantReport = PropertyReport;

}  // namespace dynrisk
