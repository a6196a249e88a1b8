#pragma once

#include <stdexcept>
#include <string>

namespace dppfit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid configuration, parameters
/// outside their domain. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The data or the numerics could not support an estimate. CLI exit code 1.
class EstimationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

/// The kernel's spectral density exceeds one somewhere, so no DPP exists.
class ExistenceViolated : public InputError {
 public:
  ExistenceViolated(const std::string& what, double margin)
      : InputError(what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(what), line_(line) {}
  /// 1-based line number in the offending file, 0 when not applicable.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyErosion : public DomainError {
 public:
  using DomainError::DomainError;
};

class TruncationFailure : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class SamplerStall : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// No close pair (or p-tuple) in the pattern; the composite likelihood is empty.
class NoPairs : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class DegenerateLikelihood : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class DegenerateConfiguration : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class NormalizerDegenerate : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class InfoNotPD : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

}  // namespace dppfit
