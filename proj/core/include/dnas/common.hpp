#pragma once

#include <stdexcept>
#include <string>

namespace dnas {

// User-facing input/shape/config violations. Maps to CLI exit code 1.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Broken internal invariants. Maps to CLI exit code 2.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

inline void check_input(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

inline void check_internal(bool cond, const std::string& msg) {
  if (!cond) throw InternalError(msg);
}

}  // namespace dnas
