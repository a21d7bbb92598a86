#ifndef MOCO_ERRORS_HPP_
#define MOCO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace moco {

// Precondition or invariant breach in library code. Always a caller bug.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Request exceeds a configured enumeration or memory cap.
class ResourceCapExceeded : public std::runtime_error {
 public:
  explicit ResourceCapExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Bad or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Objective dimension outside the supported range.
class UnsupportedDimension : public std::runtime_error {
 public:
  explicit UnsupportedDimension(const std::string& what) : std::runtime_error(what) {}
};

// A verified approximation bound failed to hold on a concrete instance.
class BoundViolation : public std::runtime_error {
 public:
  explicit BoundViolation(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value surfaced during optimization; the run cannot continue.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace moco

#endif  // MOCO_ERRORS_HPP_
