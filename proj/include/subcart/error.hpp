#pragma once

/**
 * @file
 * @brief Exception types shared by every subcart module.
 */

#include <stdexcept>
#include <string>

namespace subcart {

/// Root of the subcart exception hierarchy.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation hit a point outside an expression's domain (log of a non-positive
/// number, division by zero, non-finite result).
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Malformed expression text. Line and column are 1-based.
class ParseError : public Error
{
public:
  ParseError(const std::string & msg, int line, int column)
      : Error("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line), column_(column)
  {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

/// Objects living in different ambient dimensions were combined.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error
{
public:
  using Error::Error;
};

/// Bad command-line arguments or references to names that do not exist.
class UsageError : public Error
{
public:
  using Error::Error;
};

/// Malformed scenario or report input. `path` is a JSON pointer to the offending node.
class SchemaError : public Error
{
public:
  SchemaError(const std::string & path, const std::string & msg) : Error(path + ": " + msg), path_(path) {}

  const std::string & path() const noexcept { return path_; }

private:
  std::string path_;
};

}  // namespace subcart
