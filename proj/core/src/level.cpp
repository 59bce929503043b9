#include "dynrisk/level.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "dynrisk/errors.hpp"

namespace dynrisk {

Level Level::finite(double value) {
  if (std::isnan(value) || value < 0.0) {
    throw InputError("level must be a nonnegative number, got " + std::to_string(value));
  }
  if (std::isinf(value)) return infinity();
  Level l;
  l.value_ = value;
  return l;
}

double Level::value() const {
  if (infinite_) throw std::logic_error("value() of an infinite level");
  return value_;
}

std::string Level::to_string() const {
  if (infinite_) return "inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value_);
  return std::string(buf, end);
}

bool level_at_least(const Level& a, const Level& b, double rel_tol) {
  if (b.is_infinite()) return a.is_infinite();
  if (a.is_infinite()) return true;
  return a.value() >= b.value() - rel_tol * std::max(1.0, b.value());
}

bool level_close(const Level& a, const Level& b, double rel_tol) {
  return level_at_least(a, b, rel_tol) && level_at_least(b, a, rel_tol);
}

double level_discrepancy(const Level& a, const Level& b, double cap) {
  if (a.is_infinite() && b.is_infinite()) return 0.0;
  if (a.is_infinite()) return b.value() >= cap ? 0.0 : HUGE_VAL;
  if (b.is_infinite()) return a.value() >= cap ? 0.0 : HUGE_VAL;
  return std::abs(a.value() - b.value()) / std::max(1.0, std::abs(b.value()));
}

}  // namespace dynrisk
