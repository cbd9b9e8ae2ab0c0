#ifndef VDW_OTOC_ERRORS_HPP
#define VDW_OTOC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vdw_otoc {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NoMinimumError : public Error {
 public:
  using Error::Error;
};

class NoRootError : public Error {
 public:
  using Error::Error;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

class NoInflectionError : public Error {
 public:
  using Error::Error;
};

// Errors raised while reading a tabulated potential carry the 1-based line.
class TableError : public Error {
 public:
  TableError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public TableError {
 public:
  using TableError::TableError;
};

class OrderError : public TableError {
 public:
  using TableError::TableError;
};

class TooFewPointsError : public Error {
 public:
  using Error::Error;
};

class NoBoundStatesError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  using Error::Error;
};

class CurvatureZeroError : public Error {
 public:
  using Error::Error;
};

class DerivativeZeroError : public Error {
 public:
  using Error::Error;
};

// No exponential-growth window: the state behaves regularly.
class NoWindowError : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

}  // namespace vdw_otoc

#endif  // VDW_OTOC_ERRORS_HPP
