#pragma once

#include <stdexcept>
#include <string>

namespace declqg {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidCovariance : public Error {
 public:
  using Error::Error;
};

class BadIndex : public Error {
 public:
  using Error::Error;
};

/// A substitutability assumption cannot be certified for the given instance.
class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed; indicates a bug, not bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

class NothingToDo : public Error {
 public:
  using Error::Error;
};

class BadCertificate : public Error {
 public:
  using Error::Error;
};

/// A runtime invariance contract (cost preservation, estimate identity) broke.
class InvarianceBroken : public Error {
 public:
  using Error::Error;
};

/// A strategy reads information not available to the member in its mode.
class InfoViolation : public Error {
 public:
  using Error::Error;
};

class SingularInnovation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace declqg
