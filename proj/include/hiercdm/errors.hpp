#pragma once

#include <stdexcept>
#include <string>

namespace hiercdm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CycleError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class KTooLarge : public Error {
 public:
  using Error::Error;
};

class EmptySupport : public Error {
 public:
  using Error::Error;
};

class NotASubset : public Error {
 public:
  using Error::Error;
};

class BaseProfileMissing : public Error {
 public:
  using Error::Error;
};

class InvalidDf : public Error {
 public:
  using Error::Error;
};

class WeightError : public Error {
 public:
  using Error::Error;
};

class TooFewItems : public Error {
 public:
  using Error::Error;
};

class UnknownMethod : public Error {
 public:
  using Error::Error;
};

class ColumnCountMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised when the null fit beats the alternative fit by more than the
/// numerical slack. Carries both log-likelihoods.
class NestingError : public Error {
 public:
  NestingError(double null_loglik, double alt_loglik);
  double null_loglik() const { return null_loglik_; }
  double alt_loglik() const { return alt_loglik_; }

 private:
  double null_loglik_;
  double alt_loglik_;
};

/// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace hiercdm
