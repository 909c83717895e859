#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace redunquant {

// Root of every error raised by the library. The CLI maps subclasses onto
// exit codes (see commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (non-PD
// covariance, non-symmetric weight, negative epsilon, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotHurwitzError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::size_t path_index)
      : NumericalError(what), path_index_(path_index) {}
  std::size_t path_index() const noexcept { return path_index_; }

 private:
  std::size_t path_index_;
};

class NonUniqueError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnsupportedDiffusionError : public Error {
 public:
  using Error::Error;
};

class OutOfBoxError : public Error {
 public:
  OutOfBoxError(const std::string& what, double leakage)
      : Error(what), leakage_(leakage) {}
  double leakage() const noexcept { return leakage_; }

 private:
  double leakage_;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

class NotReliableError : public Error {
 public:
  using Error::Error;
};

class ConfigSyntaxError : public Error {
 public:
  ConfigSyntaxError(const std::string& what, std::size_t line,
                    std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ConfigValidationError : public Error {
 public:
  ConfigValidationError(const std::string& field, const std::string& detail)
      : Error("invalid config field '" + field + "': " + detail),
        field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace redunquant
