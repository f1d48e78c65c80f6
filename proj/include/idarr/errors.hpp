#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idarr {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class KernelEvaluationError : public Error {
public:
  using Error::Error;
};

/// A column of the forward operator is identically zero, so the
/// corresponding coordinate cannot be identified from data.
class DegenerateColumnError : public Error {
public:
  explicit DegenerateColumnError(std::size_t column)
      : Error("column " + std::to_string(column) + " of the operator is zero"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t column_;
};

class GeometryError : public Error {
public:
  using Error::Error;
};

class TrivialDataError : public Error {
public:
  using Error::Error;
};

class NumericalBreakdownError : public Error {
public:
  using Error::Error;
};

class StateError : public Error {
public:
  using Error::Error;
};

class InsufficientHistoryError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class UsageError : public Error {
public:
  using Error::Error;
};

}  // namespace idarr
