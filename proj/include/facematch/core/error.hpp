#pragma once

#include <stdexcept>
#include <string>

namespace facematch {

/// Input that breaks a documented precondition or file schema. The CLI maps
/// these to exit status 1; every other exception is a runtime failure (2).
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed text input; carries the offending 1-based line number.
class ParseError : public ValidationError
{
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Training or numerical breakdown (NaN loss, singular system, ...).
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace facematch
