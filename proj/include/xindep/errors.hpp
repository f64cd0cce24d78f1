#pragma once

#include <stdexcept>
#include <string>

namespace xindep {

// Malformed input: unreadable files, bad headers, unparsable cells or flags.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated (sample too small, alpha out
// of range, oracle guardrail, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace xindep
