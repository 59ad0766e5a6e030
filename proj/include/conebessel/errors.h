#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace conebessel {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or mismatched operands.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Descriptor has no concrete matrix backing.
class UnsupportedAlgebraError : public Error {
 public:
  using Error::Error;
};

class SingularElementError : public Error {
 public:
  SingularElementError(const std::string& what, double abs_det)
      : Error(what), abs_det_(abs_det) {}
  double abs_det() const { return abs_det_; }

 private:
  double abs_det_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Points too close together for the 1/(x_i - x_j) terms.
class IllConditionedError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A Gamma or Pochhammer argument sits within the pole guard.
class NonGenericParameterError : public Error {
 public:
  NonGenericParameterError(const std::string& what, double argument)
      : Error(what), argument_(argument) {}
  double argument() const { return argument_; }

 private:
  double argument_;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, double partial, long terms)
      : Error(what), partial_(partial), terms_(terms) {}
  double partial() const { return partial_; }
  long terms() const { return terms_; }

 private:
  double partial_;
  long terms_;
};

// Integral diverges for the requested parameters.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A Monte Carlo weight came out non-finite.
class DiagnosticsError : public Error {
 public:
  DiagnosticsError(const std::string& what, std::uint64_t sample)
      : Error(what), sample_(sample) {}
  std::uint64_t sample() const { return sample_; }

 private:
  std::uint64_t sample_;
};

}  // namespace conebessel
