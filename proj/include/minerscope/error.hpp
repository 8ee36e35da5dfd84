#pragma once

#include <stdexcept>
#include <string>

namespace minerscope {

// Base for every error the toolkit raises on bad data or bad parameters.
// The CLI maps these to exit code 1; programming errors are not caught.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Heights duplicated or missing on the main chain.
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Input is well-formed but cannot support the requested analysis
// (empty after sanitizing, zero timespan, too few pairs, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical solver could not satisfy its contract.
class SolverError : public Error {
public:
    using Error::Error;
};

// Invalid simulator configuration or analysis parameter.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace minerscope
