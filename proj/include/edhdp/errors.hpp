#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edhdp {

/// Dimension or shape mismatch, non-finite input, or any other broken
/// precondition on a call.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation needs the one-step memory (previous features, value, and
/// reward) but the agent has not completed a step yet.
class NotInitialized : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A learning rate violates l < 1 / ||phi||^2 in strict guard mode.
class LearningRateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. Parse errors carry a 1-based line and
/// column; validation errors leave both at zero.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0,
                       std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace edhdp
