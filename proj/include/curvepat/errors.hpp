#pragma once

#include <stdexcept>
#include <string>

namespace curvepat {

struct SyntaxError : std::runtime_error {
  std::size_t offset;
  SyntaxError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"),
        offset(off) {}
};

struct UnsupportedVariable : SyntaxError {
  UnsupportedVariable(char c, std::size_t off)
      : SyntaxError(std::string("unsupported variable '") + c + "', only 't' is allowed", off) {}
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A curve whose type at the recentering point is not finite (some exact
// linear combination of components vanishes identically near the point).
struct NotFiniteType : DomainError {
  using DomainError::DomainError;
};

struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace curvepat
