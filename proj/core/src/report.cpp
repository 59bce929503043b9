#include "dynrisk/report.hpp"

#include <stdexcept>

namespace dynrisk {

const PropertyResult& PropertyReport::at(std::string_view name) const {
  for (const auto& r : results) {
    if (r.name == name) return r;
  }
  throw std::out_of_range("no property named " + std::string(name));
}

PropertyResult& PropertyReport::add(std::string name, double min_effective_ratio) {
  PropertyResult r;
  r.name = std::move(name);
  r.min_effective_ratio = min_effective_ratio;
  results.push_back(std::move(r));
  return results.back();
}

}  // namespace dynrisk
