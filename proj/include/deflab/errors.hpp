#pragma once

#include <stdexcept>
#include <string>

namespace deflab {

// Argument outside the mathematical domain of a map (x <= 0 in U, t < 0 in kappa, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The dual problem is not finitely valued for the requested parameters.
class InfiniteDualError : public DomainError {
 public:
  explicit InfiniteDualError(const std::string& what)
      : DomainError("assumption v(y)<∞ violated: " + what) {}
};

class DegenerateMeasureError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bundles that must share a grid, path range or convention do not.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SimulationIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StrategyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deflab
