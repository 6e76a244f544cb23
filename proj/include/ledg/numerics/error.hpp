#pragma once

#include <stdexcept>
#include <string>

namespace ledg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor operands disagree in shape.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (wrong task, non-scalar output, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input data or parameters fall outside their valid range.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Text input could not be parsed; carries the 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ledg
