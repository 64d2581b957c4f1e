#pragma once

#include <stdexcept>
#include <string>

namespace irsai {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (files, parameters, dimensions).
class InputError : public Error {
public:
    using Error::Error;
};

/// Matrix Market parse failure; carries the offending 1-based line number
/// and, once known, the file it came from.
class ParseError : public InputError {
public:
    ParseError(const std::string& reason, std::size_t line, const std::string& source = {})
        : InputError((source.empty() ? "line " : source + ":") + std::to_string(line) + ": " + reason),
          reason_(reason), line_(line) {}

    const std::string& reason() const noexcept { return reason_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string reason_;
    std::size_t line_;
};

/// Numerical failure: singular systems, breakdown, non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// No perfect matching exists on the nonzero pattern.
class StructurallySingularError : public NumericalError {
public:
    StructurallySingularError(const std::string& what, int column)
        : NumericalError(what), column_(column) {}

    int column() const noexcept { return column_; }

private:
    int column_;
};

} // namespace irsai
