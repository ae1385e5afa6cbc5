#pragma once

#include <stdexcept>
#include <string>

namespace oel {

// Invalid or inconsistent configuration (dimensions, config keys, values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API used out of order (backward without forward, step after done, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Caller violated an operation precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite value reached a loss or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stored policy in the chain failed to reach its recorded goal.
class ChainIntegrityError : public std::runtime_error {
 public:
  ChainIntegrityError(std::size_t link, const std::string& what)
      : std::runtime_error(what), link_(link) {}
  std::size_t link() const noexcept { return link_; }

 private:
  std::size_t link_;
};

}  // namespace oel
