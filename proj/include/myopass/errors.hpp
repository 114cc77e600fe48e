#pragma once

#include <stdexcept>
#include <string>

namespace myopass {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A window or query falls outside the span of the data it is applied to.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Two signals that must share a time grid do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The data carries no information for the requested statistic (zero motion,
/// zero variance, all-zero differences).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Map lookups outside the measured frequency grid.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class SingularFitError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

class InvalidComparisonError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace myopass
