#pragma once

#include <compare>
#include <string>
#include <vector>

namespace dynrisk {

/// Acceptability level in [0, +inf]. +inf is a distinct value ordered above
/// every real; there is no arithmetic on levels, only comparison.
class Level {
 public:
  constexpr Level() = default;

  /// Throws InputError for negative or NaN values; +inf as a double maps to infinity().
  static Level finite(double value);
  static constexpr Level infinity() {
    Level l;
    l.infinite_ = true;
    return l;
  }
  static constexpr Level zero() { return Level{}; }

  constexpr bool is_infinite() const { return infinite_; }
  /// Throws std::logic_error on +inf.
  double value() const;
  /// value() for finite levels, `cap` for +inf. For reporting only.
  double value_or(double cap) const { return infinite_ ? cap : value_; }

  constexpr bool at_least(double x) const { return infinite_ || value_ >= x; }

  friend constexpr bool operator==(const Level& a, const Level& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend constexpr std::partial_ordering operator<=>(const Level& a, const Level& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
    return a.value_ <=> b.value_;
  }

  /// "inf" or the shortest round-trip decimal form.
  std::string to_string() const;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

using LevelVector = std::vector<Level>;

/// a >= b up to a relative tolerance; +inf compared symbolically.
bool level_at_least(const Level& a, const Level& b, double rel_tol);
bool level_close(const Level& a, const Level& b, double rel_tol);

/// |a - b| / max(1, |b|) for finite levels; 0 when both are +inf or when one
/// is +inf and the other is at or above `cap`; +inf otherwise.
double level_discrepancy(const Level& a, const Level& b, double cap);

}  // namespace dynrisk
