#pragma once

#include <stdexcept>
#include <string>

namespace lbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A parameter, dimension or configuration value violates a precondition.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// An estimation step produced a non-finite quantity.
class NumericalFailure : public Error {
  public:
    using Error::Error;
};

/// Malformed input file; the message carries the row/column location.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what + " at row " + std::to_string(row) + ", column " +
                std::to_string(column)),
          row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t row_;
    std::size_t column_;
};

/// A request that is well formed but outside what the implementation supports.
class Unsupported : public Error {
  public:
    using Error::Error;
};

/// A stratified sample cannot be drawn with the requested allocation.
class InfeasibleSample : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace lbm
