#pragma once

#include <stdexcept>
#include <string>

namespace dynrisk {

// Malformed or inconsistent user input: trees, processes, measure sets, flags.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that cannot produce a finite, well-defined answer
// (conditioning on a null atom, NaN inputs, bisection bracket failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The brute-force oracle declines a problem that is too large for it.
class OracleRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynrisk
