#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace limgroup {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose descriptors (shape, kind, index set) do not match.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Singular or near-singular data (|det| at or below the degeneracy floor,
/// loss of monotonicity of a diffeomorphism, vanishing derivatives).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Input outside the declared domain of a chart, logarithm, or grid.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or non-convergence inside an iterative scheme.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t step = -1)
      : Error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what), step_(step) {}

  /// Index of the failing step, or -1 when not tied to a step.
  std::ptrdiff_t step() const { return step_; }

 private:
  std::ptrdiff_t step_;
};

/// No index of a directed system admits the requested segment.
class WitnessError : public Error {
 public:
  using Error::Error;
};

/// A directed family of maps violates ψ_i = ψ_j ∘ λ_ji.
class CompatibilityError : public Error {
 public:
  CompatibilityError(const std::string& what, double defect) : Error(what), defect_(defect) {}
  double defect() const { return defect_; }

 private:
  double defect_;
};

/// No usable factorization of a group element into chart-domain factors.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Well-formed input with an invalid value; carries the offending key.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace limgroup
