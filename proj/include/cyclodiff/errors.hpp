#pragma once

#include <stdexcept>
#include <string>

namespace cyclodiff {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivisionByZero : public Error {
 public:
  explicit DivisionByZero(const std::string& what) : Error("division by zero: " + what) {}
};

/// A membership or valuation question cannot be decided at the working precision.
class InsufficientPrecision : public Error {
 public:
  explicit InsufficientPrecision(const std::string& what)
      : Error("insufficient precision: " + what) {}
};

class ValuationOfZero : public Error {
 public:
  explicit ValuationOfZero(const std::string& what) : Error("valuation of zero: " + what) {}
};

/// An input lies outside the domain of an operation (non-integral, wrong level, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain error: " + what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("i/o error: " + what) {}
};

}  // namespace cyclodiff
