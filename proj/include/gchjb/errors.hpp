#pragma once

#include <stdexcept>

namespace gchjb {

// Bad or inconsistent input data: malformed config, failed validation of
// problem data, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its target.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gchjb
